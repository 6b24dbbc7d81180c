"""Shared enums, errors, crypto helpers and logging."""

from .enums import SchemaId, TicketKind, RoundStatus, Verdict
from .logger import logger

__all__ = ["SchemaId", "TicketKind", "RoundStatus", "Verdict", "logger"]
