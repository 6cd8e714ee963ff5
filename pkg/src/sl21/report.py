"""Verification reports: named checks with a value, a threshold and a verdict."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class CheckItem:
    name: str
    value: Any
    threshold: Any
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        out = {"name": self.name, "value": _jsonable(self.value), "threshold": _jsonable(self.threshold),
               "pass": bool(self.passed)}
        if self.detail:
            out["detail"] = self.detail
        return out


def _jsonable(x: Any) -> Any:
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    if isinstance(x, float):
        return float(f"{x:.6e}")
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    try:
        z = complex(x)
    except (TypeError, ValueError):
        return str(x)
    if z.imag == 0:
        return float(f"{z.real:.15e}")
    return [float(f"{z.real:.15e}"), float(f"{z.imag:.15e}")]


@dataclass
class Report:
    suite: str
    items: list[CheckItem] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def check_le(self, name: str, value: float, threshold: float, detail: str = "") -> CheckItem:
        """Record ``value <= threshold`` (NaN fails)."""
        item = CheckItem(name, float(value), threshold, bool(float(value) <= threshold), detail)
        self.items.append(item)
        return item

    def check_true(self, name: str, ok: bool, detail: str = "") -> CheckItem:
        item = CheckItem(name, bool(ok), True, bool(ok), detail)
        self.items.append(item)
        return item

    def check_completed(self, exc: BaseException | None) -> CheckItem:
        """Record whether the remaining checks could be evaluated at all."""
        detail = "" if exc is None else f"{type(exc).__name__}: {exc}"
        return self.check_true("evaluation_completed", exc is None, detail)

    def extend(self, other: "Report") -> None:
        self.items.extend(other.items)

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def failures(self) -> list[CheckItem]:
        return [i for i in self.items if not i.passed]

    def to_json(self) -> dict:
        return {"suite": self.suite, **self.meta, "pass": self.passed, "checks": [i.to_json() for i in self.items]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)
