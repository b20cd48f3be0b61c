"""Structured results shared by every module, with JSON-ready conversion."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA = "pcrit/1"

__all__ = ["SCHEMA", "Certificate", "to_jsonable", "Report"]


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy types and dataclasses to plain JSON values.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``
    so reports stay strict JSON.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


class Report:
    """Mixin giving dataclass reports a ``to_dict`` carrying the schema tag."""

    _kind = "report"

    def to_dict(self):
        out = {"schema": SCHEMA, "kind": self._kind}
        for f in dataclasses.fields(self):
            if not f.name.startswith("_"):
                out[f.name] = to_jsonable(getattr(self, f.name))
        return out


@dataclass
class Certificate(Report):
    """Outcome of checking one inequality or predicate.

    ``gap`` follows the convention LHS minus RHS, so a nonnegative gap (up
    to ``tolerances['nonneg']``) means the inequality holds. ``min_term`` and
    ``argmin`` locate the smallest individual summand when the quantity is a
    sum. ``details`` holds free-form diagnostics such as per-vertex residuals.
    """

    name: str
    gap: float
    passed: bool
    min_term: float = math.nan
    argmin: Any = None
    equality_flag: bool = False
    tolerances: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    _kind = "certificate"

    def __bool__(self):
        return bool(self.passed)
