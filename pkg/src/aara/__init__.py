"""Automatic amortized resource analysis for a small first-order language."""

import sys

# derivations recurse over the syntax tree; encoded programs get deep
if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

__version__ = "0.1.0"
