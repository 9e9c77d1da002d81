"""
sparsevi CLI
============

Command-line front end: fit, gradcheck, varcompare, bench and replay.
"""

from sparsevi.cli.app import build_parser, dispatch, main

__all__ = ["build_parser", "dispatch", "main"]
