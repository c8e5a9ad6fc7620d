"""`python -m fidlkit` entry point (used for subprocess backends so no
console script needs to be on PATH)."""
from __future__ import annotations

import sys

from .cli import run_main

if __name__ == "__main__":
    sys.exit(run_main())
