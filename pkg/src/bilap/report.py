"""Structured pass/fail records for verification runs.

Every check stores (measured, expected, tolerance) so the verdict can be
recomputed from the record alone; expected-failure entries (non-minimal
negative controls) are marked distinctly so a run can assert both
directions of the minimality hypothesis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction


def _num(x):
    # JSON-stable scalar: Fractions go out as exact num/den pairs.
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, (int, float)):
        return x
    return float(x)


@dataclass(frozen=True)
class Check:
    """One verified identity or bound.

    `claim` names what is asserted (e.g. "lambda1 == n"); `kind` is
    "equality" or "lower_bound".  `expected_failure` marks negative
    controls whose identity is supposed to fail ("hypothesis violated").
    """

    name: str
    claim: str
    measured: object
    expected: object
    tolerance: object
    passed: bool
    kind: str = "equality"
    expected_failure: bool = False

    def recompute(self) -> bool:
        """Re-derive `passed` from the stored fields (reports self-verify).

        Stays in exact arithmetic when all stored fields are rational.
        """
        exact = all(
            isinstance(x, (Fraction, int))
            for x in (self.measured, self.expected, self.tolerance)
        )
        conv = (lambda x: x) if exact else float
        m, e, t = conv(self.measured), conv(self.expected), conv(self.tolerance)
        if self.kind == "lower_bound":
            return m >= e - t
        return abs(m - e) <= t

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "claim": self.claim,
            "measured": _num(self.measured),
            "expected": _num(self.expected),
            "tolerance": _num(self.tolerance),
            "kind": self.kind,
            "pass": self.passed,
            "expected_failure": self.expected_failure,
        }


@dataclass(frozen=True)
class ConvergenceRecord:
    """Refinement study of one scalar quantity at >= 3 mesh levels."""

    quantity: str
    levels: tuple[int, ...]
    values: tuple[float, ...]
    estimated_rate: float
    extrapolated: float
    expected_rate: float = 2.0
    reliable: bool = True

    @property
    def rate_consistent(self) -> bool:
        """Empirical rate within 0.5 of the assumed order-2 extrapolation."""
        return abs(self.estimated_rate - self.expected_rate) <= 0.5

    def to_json(self) -> dict:
        return {
            "quantity": self.quantity,
            "levels": list(self.levels),
            "values": list(self.values),
            "estimated_rate": self.estimated_rate,
            "extrapolated": self.extrapolated,
            "expected_rate": self.expected_rate,
            "reliable": self.reliable,
            "rate_consistent": self.rate_consistent,
        }


@dataclass
class VerificationReport:
    """All checks for one subject (a spec, analytic or meshed)."""

    subject: str
    checks: list[Check] = field(default_factory=list)
    convergence: list[ConvergenceRecord] = field(default_factory=list)

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    @property
    def all_passed(self) -> bool:
        """True iff every non-expected-failure check passed and every
        expected-failure check did fail as predicted."""
        for c in self.checks:
            if c.expected_failure:
                if c.passed:
                    return False
            elif not c.passed:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "subject": self.subject,
            "all_passed": self.all_passed,
            "checks": [c.to_json() for c in self.checks],
            "convergence": [r.to_json() for r in self.convergence],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def to_csv_text(self) -> str:
        lines = ["check,measured,expected,tolerance,pass,expected_failure"]
        for c in self.checks:
            lines.append(
                f"{c.name},{float(c.measured)!r},{float(c.expected)!r},"
                f"{float(c.tolerance)!r},{c.passed},{c.expected_failure}"
            )
        return "\n".join(lines) + "\n"

    def summary_lines(self):
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            if c.expected_failure:
                tag += " (expected failure)" if not c.passed else " (UNEXPECTED PASS)"
            yield (
                f"{tag:28s} {c.name}: measured={float(c.measured):.9g} "
                f"expected={float(c.expected):.9g} tol={float(c.tolerance):.3g}"
            )
