"""Estimate reports: one measured left side against a constant-free right side."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Any

SCHEMA_VERSION = 1


def _plain(value):
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return _plain(value.item())
    return value


@dataclass
class EstimateReport:
    inequality_id: str
    lhs: float
    rhs_shape: float
    params: dict = field(default_factory=dict)
    resolution: int | None = None
    ratio: float = field(init=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs_shape = float(self.rhs_shape)
        if self.lhs < 0 or self.rhs_shape < 0:
            raise ValueError("lhs and rhs_shape must be nonnegative")
        if self.lhs == 0.0:
            self.ratio = 0.0
        elif self.rhs_shape == 0.0:
            self.ratio = math.inf
        else:
            self.ratio = self.lhs / self.rhs_shape

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["params"] = _plain(self.params)
        out["schema_version"] = SCHEMA_VERSION
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EstimateReport":
        rep = cls(data["inequality_id"], data["lhs"], data["rhs_shape"],
                  data.get("params", {}), data.get("resolution"))
        return rep


def summarize(reports: list[EstimateReport]) -> dict[str, dict]:
    """Max-reduction per inequality id: sup ratio and the arg-max parameters."""
    out: dict[str, dict] = {}
    for rep in reports:
        cur = out.get(rep.inequality_id)
        if cur is None or rep.ratio > cur["sup_ratio"]:
            out[rep.inequality_id] = {
                "sup_ratio": rep.ratio,
                "argmax": _plain(rep.params),
                "resolution": rep.resolution,
                "count": (cur["count"] if cur else 0) + 1,
            }
        else:
            cur["count"] += 1
    return out
