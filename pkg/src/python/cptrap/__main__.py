"""Entry point for `python -m cptrap`."""

import sys

from cptrap.cli import main

if __name__ == "__main__":
    sys.exit(main())
