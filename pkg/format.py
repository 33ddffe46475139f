#!/usr/bin/env python3
import subprocess


def _format_project():
    """Run ruff and black on the project."""
    # Run ruff format
    subprocess.run(
        ["poetry", "run", "ruff", "format", "netkernel", "tests"],
        check=True,
    )

    # Run ruff check --fix
    subprocess.run(
        ["poetry", "run", "ruff", "check", "--fix", "netkernel", "tests"],
        check=True,
    )

    # Run black
    subprocess.run(
        ["poetry", "run", "black", "netkernel", "tests"],
        check=True,
    )


def main():
    _format_project()


if __name__ == "__main__":
    main()
