#!/usr/bin/env python3
"""Entry point for spraylab: left-invariant spray geometry on Lie groups."""

import sys


def main():
    try:
        from spraylab.cli import main as cli_main
    except ImportError as e:
        print(f"❌ Missing dependency: {e}")
        print("   Run: pip install -r requirements.txt")
        sys.exit(1)

    try:
        sys.exit(cli_main(sys.argv[1:]))
    except KeyboardInterrupt:
        print("\n👋 interrupted.")
        sys.exit(130)


if __name__ == "__main__":
    main()
