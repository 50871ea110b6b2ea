"""Hand-built models shipped with the package (loaded by file stem)."""
from __future__ import annotations

import json
from importlib import resources
from typing import List


def names() -> List[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".json"))


def raw(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{name}.json").read_text())


def path(name: str) -> str:
    return str(resources.files(__name__).joinpath(f"{name}.json"))
