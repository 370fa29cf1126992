#!/usr/bin/env python3
"""
Local-operations transformation verifier

Decides whether a tensor-product channel E_A (x) E_B can map each bipartite
pure state x_i to y_i, proves that it cannot, or reports that the question
is still open.

Usage:
    python lo_verifier.py check fixtures/sec3_joint.json
    python lo_verifier.py pair fixtures/sec3_pair1.json --format json
    python lo_verifier.py examples --list

Configuration:
    1. Optional lo_verify.yaml in the project root (or --config <file>)
    2. LO_VERIFY_* environment variables (override the YAML file)
    3. Command-line flags (override both)
"""

import sys
from pathlib import Path

# Ensure the package is in the path
_current_dir = Path(__file__).resolve().parent
if str(_current_dir) not in sys.path:
    sys.path.insert(0, str(_current_dir))

from cli import run


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
