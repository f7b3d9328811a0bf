"""Kernel backend selection.

The compiled ``_native`` module is used when it was built; otherwise the
pure-Python ``_pure`` module is imported. Set ``VNFPLACE_BACKEND=pure`` to
force the fallback.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _pure


def load(name: str) -> ModuleType:
    if name == "pure":
        return _pure
    if name == "native":
        return importlib.import_module("vnfplace._kernels._native")
    raise ValueError(f"unknown kernel backend {name!r}")


def available() -> list[str]:
    names = ["pure"]
    try:
        load("native")
    except ImportError:
        pass
    else:
        names.insert(0, "native")
    return names


def _select() -> ModuleType:
    wanted = os.environ.get("VNFPLACE_BACKEND", "").strip().lower()
    if wanted:
        return load(wanted)
    try:
        return load("native")
    except ImportError:
        return _pure


backend = _select()
BACKEND = backend.NAME
