"""Deterministic JSON: sorted keys, floats at 17 significant digits, exact numbers as strings."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

from .exact import DyadicRational, ExactScalar

__all__ = ["dumps", "dump", "load", "format_float"]


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    # keep floats typed as floats on reload
    return text if any(c in text for c in ".en") else text + ".0"


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, (Fraction, DyadicRational)):
        return json.dumps(str(obj if isinstance(obj, Fraction) else obj.to_fraction()))
    if isinstance(obj, ExactScalar):
        return _encode(obj.to_tuple(), indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(obj[k], indent, level + 1)
                 for k in sorted(obj, key=str)]
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float, str, Fraction, DyadicRational)) and not isinstance(x, bool)
               for x in obj):
            return "[" + ", ".join(_encode(x, 0, 0) for x in obj) + "]"
        return "[" + pad + sep.join(_encode(x, indent, level + 1) for x in obj) + end + "]"
    if hasattr(obj, "to_json"):
        return _encode(obj.to_json(), indent, level)
    if hasattr(obj, "item"):  # numpy scalars
        return _encode(obj.item(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 1) -> str:
    return _encode(obj, indent, 0) + "\n"


def dump(obj: Any, path) -> None:
    Path(path).write_text(dumps(obj))


def load(path) -> Any:
    return json.loads(Path(path).read_text())
