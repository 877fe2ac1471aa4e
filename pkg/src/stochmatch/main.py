"""Main entry point for the stochmatch workbench."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
