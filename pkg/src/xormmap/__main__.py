"""Entry point for running xormmap as a module."""

from .cli import app

if __name__ == "__main__":
    app()
