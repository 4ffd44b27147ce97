#!/usr/bin/env python
"""Command-line utility for the Chern-Simons Riemann-Roch verification engine."""
import sys


def main():
    """Run a verification command."""
    try:
        from csrr_app.cli import main as run
    except ImportError as exc:
        raise ImportError(
            "Couldn't import the engine. Are sympy and numpy installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to run `uv sync`?"
        ) from exc
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
