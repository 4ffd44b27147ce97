"""Verification reports and their JSON rendering."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable

from csrr_app.exterior import Form
from csrr_app.matform import MatForm
from csrr_app.ratfun import RatFun


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    PASS_MOD_DLOG = "pass-mod-dlog"
    PASS_MOD_EXACT = "pass-mod-exact"

    @property
    def passed(self) -> bool:
        return self is not Status.FAIL


_SEVERITY = [Status.PASS, Status.PASS_MOD_DLOG, Status.PASS_MOD_EXACT, Status.FAIL]


def worst_status(statuses: Iterable[Status]) -> Status:
    return max(statuses, key=_SEVERITY.index, default=Status.PASS)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: Form | None = None


def form_to_terms(form: Form) -> list[dict[str, Any]]:
    names = form.universe.names
    return [
        {"coeff": str(form.terms[key]), "gens": [names[g] for g in key]}
        for key in sorted(form.terms)
    ]


def matform_to_json(matrix: MatForm) -> list[list[Any]]:
    rows = []
    for row in matrix.entries:
        rows.append(
            [str(e.scalar_value()) if e.degrees() <= {0} else form_to_terms(e) for e in row]
        )
    return rows


def to_jsonable(value: Any) -> Any:
    if isinstance(value, Form):
        return form_to_terms(value)
    if isinstance(value, MatForm):
        return matform_to_json(value)
    if isinstance(value, (RatFun, Fraction)):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, float) and value != value:
        return None
    return value


@dataclass
class VerificationReport:
    check: str
    params: dict[str, Any]
    status: Status
    witness: Any = None
    seed: int | None = None
    millis: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "params": to_jsonable(self.params),
            "status": self.status.value,
            "witness": to_jsonable(self.witness),
            "seed": self.seed,
            "millis": round(self.millis, 3),
        }

    def detached(self) -> VerificationReport:
        """A copy holding only JSON data, safe to ship between processes."""
        return replace(self, params=to_jsonable(self.params), witness=to_jsonable(self.witness))


@dataclass
class Stopwatch:
    started: float = field(default_factory=time.perf_counter)

    @property
    def millis(self) -> float:
        return (time.perf_counter() - self.started) * 1000.0


def status_of(ok: bool) -> Status:
    return Status.PASS if ok else Status.FAIL


def emit_report(reports: Iterable[VerificationReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


def all_passed(reports: Iterable[VerificationReport]) -> bool:
    return all(r.status.passed for r in reports)
