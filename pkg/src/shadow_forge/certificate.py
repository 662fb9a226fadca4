"""Pass/fail reports for inequalities checked on a finite window."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

REL_TOL = 1e-8
ABS_FLOOR = 1e-12


def holds(lhs, rhs, rel_tol: float = REL_TOL, abs_floor: float = ABS_FLOOR):
    """``lhs <= rhs`` up to a relative tolerance with an absolute floor."""
    return np.asarray(lhs) <= np.asarray(rhs) * (1.0 + rel_tol) + abs_floor


def safe_ratio(lhs, rhs, abs_floor: float = ABS_FLOOR):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0),
                     np.where(lhs <= abs_floor, 0.0, np.inf))
    return r


@dataclass
class Check:
    name: str
    worst_ratio: float
    passed: bool
    where: Any = None
    detail: str = ""

    def to_dict(self) -> dict:
        where = self.where
        if isinstance(where, tuple):
            where = list(where)
        return {
            "name": self.name,
            "worst_ratio": float(self.worst_ratio),
            "pass": bool(self.passed),
            "where": where,
            "detail": self.detail,
        }


@dataclass
class Certificate:
    checked_window: tuple
    inequalities: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    approximate: bool = False

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.inequalities)

    def add(self, name, lhs, rhs, where=None, detail="", rel_tol=REL_TOL,
            abs_floor=ABS_FLOOR) -> Check:
        """Record ``lhs <= rhs`` taken elementwise; ``where`` labels elements."""
        lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), lhs.shape)
        if lhs.size == 0:
            check = Check(name, 0.0, True, None, detail or "empty")
        else:
            ok = holds(lhs, rhs, rel_tol, abs_floor)
            ratios = safe_ratio(lhs, rhs, abs_floor)
            flat = int(np.argmax(ratios))
            loc = where[flat] if where is not None else flat
            check = Check(name, float(ratios.ravel()[flat]), bool(ok.all()),
                          loc, detail)
        self.inequalities.append(check)
        return check

    def add_check(self, check: Check) -> Check:
        self.inequalities.append(check)
        return check

    def extend(self, other: "Certificate", prefix: str = "") -> "Certificate":
        for c in other.inequalities:
            self.inequalities.append(
                Check(prefix + c.name, c.worst_ratio, c.passed, c.where,
                      c.detail))
        self.notes.extend(other.notes)
        self.approximate = self.approximate or other.approximate
        return self

    def get(self, name: str) -> Check:
        for c in self.inequalities:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.inequalities if not c.passed]

    def to_dict(self) -> dict:
        return {
            "checked_window": list(self.checked_window),
            "overall": self.overall,
            "approximate": self.approximate,
            "inequalities": [c.to_dict() for c in self.inequalities],
            "notes": list(self.notes),
        }

    def summary(self) -> str:
        lines = [f"window={self.checked_window} overall={'PASS' if self.overall else 'FAIL'}"]
        for c in self.inequalities:
            lines.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: "
                         f"worst_ratio={c.worst_ratio:.6g} at {c.where}")
        return "\n".join(lines)
