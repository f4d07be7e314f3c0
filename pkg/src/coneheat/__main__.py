"""``python -m coneheat`` entry point."""

from .cli import main

main()
