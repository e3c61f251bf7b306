"""Run reports: JSON with 17 significant digits per float, plus a CSV mirror."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _encode(obj: Any, indent: int, depth: int) -> str:
    pad = " " * (indent * (depth + 1))
    end = " " * (indent * depth)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(repr(obj))
        return format(obj, ".17g") if obj != int(obj) or abs(obj) >= 1e17 else format(obj, ".1f")
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, depth + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, depth + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _encode(_plain(obj), indent, 0) + "\n"


@dataclass
class RunReport:
    command: list[str]
    payload: dict
    seed: int
    version: str
    timings: dict | None = None
    csv_rows: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"command": list(self.command), **self.payload,
               "seed": self.seed, "version": self.version}
        if self.timings is not None:
            out["timings"] = self.timings
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = [_plain(r) for r in self.csv_rows]
        if not rows:
            return ""
        fields = list(dict.fromkeys(k for r in rows for k in r))
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (format(v, ".17g") if isinstance(v, float) else v)
                             for k, v in r.items()})
        return buf.getvalue()


def error_object(kind: str, message: str, **extra) -> dict:
    return {"error": {"kind": kind, "message": message, **extra}}
