"""Invariant checks for GameSpec instances"""
from dataclasses import dataclass, field

import numpy as np

from games.spec import MASS_TOL


@dataclass(frozen=True)
class Violation:
    """A single broken invariant"""

    kind: str
    location: tuple
    magnitude: float
    message: str

    def to_dict(self):
        return {
            "kind": self.kind,
            "location": list(self.location),
            "magnitude": self.magnitude,
            "message": self.message,
        }


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def to_dict(self):
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_game(spec, tol=MASS_TOL):
    """
    List every invariant violation of a game; an empty report means valid
    Args:
        spec: GameSpec to check
        tol: Tolerance on probability mass
    Returns:
        ValidationReport
    """
    report = ValidationReport()
    labels = (spec.states, spec.actions1, spec.actions2)

    def where(k, i, j):
        return (labels[0][k], labels[1][i], labels[2][j])

    negative = np.argwhere(spec.kernel < 0.0)
    for k, i, j, k2, s in negative:
        value = float(spec.kernel[k, i, j, k2, s])
        report.violations.append(Violation(
            "negative_probability", where(k, i, j) + (spec.states[k2], spec.signals[s]),
            -value, f"p({spec.states[k2]},{spec.signals[s]}|...) = {value}",
        ))

    row_sums = spec.kernel.sum(axis=(3, 4))
    for k, i, j in np.argwhere(np.abs(row_sums - 1.0) > tol):
        total = float(row_sums[k, i, j])
        report.violations.append(Violation(
            "row_sum", where(k, i, j), abs(total - 1.0),
            f"transition row sums to {total:.15g}",
        ))

    for k, i, j in np.argwhere((spec.reward < 0.0) | (spec.reward > 1.0)):
        value = float(spec.reward[k, i, j])
        magnitude = -value if value < 0.0 else value - 1.0
        report.violations.append(Violation(
            "reward_range", where(k, i, j), magnitude, f"reward {value} outside [0, 1]",
        ))

    b = spec.initial_belief.probs
    for k in np.flatnonzero(b < 0.0):
        report.violations.append(Violation(
            "negative_belief", (spec.states[k],), float(-b[k]), f"initial belief entry {b[k]}",
        ))
    if abs(float(b.sum()) - 1.0) > tol:
        report.violations.append(Violation(
            "belief_mass", (), abs(float(b.sum()) - 1.0),
            f"initial belief sums to {float(b.sum()):.15g}",
        ))
    return report
