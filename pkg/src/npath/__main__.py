"""Module entry point: ``python -m npath`` behaves like ``npath-sim``."""

from .runner import main

if __name__ == "__main__":
    raise SystemExit(main())
