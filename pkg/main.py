"""
Strichartz toolkit
Command-line entry point
"""

import sys

from strichartz.cli import main as run_cli


def main():
    """Main application entry point."""
    try:
        sys.exit(run_cli(sys.argv[1:]))
    except KeyboardInterrupt:
        print("Interrupted", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()
