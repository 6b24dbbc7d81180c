import sys

from xchain_sync.cli import main

sys.exit(main())
