"""Pass/fail records shared by the verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float | None = None
    limit: float | None = None
    detail: str = ""

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "limit": self.limit,
            "detail": self.detail,
        }


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, value: float | None = None,
            limit: float | None = None, detail: str = "") -> Check:
        check = Check(name, bool(passed), None if value is None else float(value),
                      None if limit is None else float(limit), detail)
        self.checks.append(check)
        return check

    def bound(self, name: str, value: float, limit: float, detail: str = "") -> Check:
        """Record ``value <= limit``."""
        return self.add(name, value <= limit, value, limit, detail)

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.value, c.limit, c.detail))

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict[str, Any]:
        return {"title": self.title, "passed": self.passed,
                "checks": [c.as_dict() for c in self.checks]}

    def __str__(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            extra = ""
            if c.value is not None:
                extra = f" value={c.value:.3e}"
                if c.limit is not None:
                    extra += f" limit={c.limit:.1e}"
            if c.detail:
                extra += f" ({c.detail})"
            lines.append(f"  [{mark}] {c.name}{extra}")
        return "\n".join(lines)
