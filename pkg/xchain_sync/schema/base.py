# -*- coding = utf-8 -*-
# @Time: 2026-08-17 10:30:15
# @Author: xchain-sync developers
# @Site:
# @File: base.py
from typing import Annotated, Any

from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _hex_to_bytes(value: Any) -> Any:
    if isinstance(value, str):
        return bytes.fromhex(value.removeprefix("0x"))
    return value


# 32-byte hashes and other raw byte strings; hex in JSON, bytes in Python.
HashBytes = Annotated[
    bytes,
    BeforeValidator(_hex_to_bytes),
    PlainSerializer(lambda value: value.hex(), return_type=str, when_used="json"),
]

PinnedHash = HashBytes


class PrettyPrintBaseModel(BaseModel):
    def __str__(self):
        lines = [f"{name}: {value!r}" for name, value in self.__dict__.items()]
        return f"{self.__class__.__name__}(\n  " + ",\n  ".join(lines) + "\n)"

    __repr__ = __str__
    model_config = ConfigDict(populate_by_name=True)


class FrozenModel(PrettyPrintBaseModel):
    """Records that travel between actors and are never mutated in place."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)
