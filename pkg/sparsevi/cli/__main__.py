"""
Entry point for running the command line.

Usage:
    python -m sparsevi.cli fit --model gaussian-test
"""

import sys

from sparsevi.cli.app import main

if __name__ == "__main__":
    sys.exit(main())
