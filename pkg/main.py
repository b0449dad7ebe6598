"""
Entry point for the credal conformal toolkit.

Equivalent to the installed `credal` console script:

    python main.py calibrate --input data.jsonl --alpha 0.05 --out artifact.json
"""

import os
import sys

# Add the repository root to the Python path so `src` imports resolve when run as a script
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.cli.commands import cli  # noqa: E402


def main():
    cli(prog_name="credal")


if __name__ == "__main__":
    main()
