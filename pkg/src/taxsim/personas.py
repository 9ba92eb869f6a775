"""Household persona roster: a packaged default of fifty personas, or any
user-supplied JSON file with the same record shape."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from taxsim.economy import Persona


def load_personas(path: str | Path | None = None) -> list[Persona]:
    """Load persona records (name, age, city, occupation) from ``path``, or
    from the packaged roster when no path is given."""
    if path:
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"persona roster not found: {file_path}")
        text = file_path.read_text(encoding="utf-8")
    else:
        text = (
            resources.files("taxsim").joinpath("data/personas.json").read_text("utf-8")
        )
    records = json.loads(text)
    if not isinstance(records, list) or not records:
        raise ValueError("persona roster must be a non-empty JSON list")
    return [
        Persona(
            name=r["name"], age=int(r["age"]), city=r["city"], occupation=r["occupation"]
        )
        for r in records
    ]


def roster_for(count: int, personas: list[Persona]) -> list[Persona]:
    """First ``count`` personas, cycling when the roster is smaller."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return [personas[i % len(personas)] for i in range(count)]
