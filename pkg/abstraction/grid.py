"""The η-uniform grid on the belief simplex and support-preserving projection"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from games.spec import Belief
from utils.errors import EtaTooSmall

COST_TOL = 1e-9


@dataclass(frozen=True)
class GridPoint:
    """Belief with entries numerators[k] / eta"""

    numerators: tuple
    eta: int

    def __post_init__(self):
        numerators = tuple(int(n) for n in self.numerators)
        if any(n < 0 or n > self.eta for n in numerators) or sum(numerators) != self.eta:
            raise ValueError(f"numerators {numerators} do not sum to eta={self.eta}")
        object.__setattr__(self, "numerators", numerators)

    @property
    def belief(self):
        return Belief(np.array(self.numerators, dtype=float) / self.eta)

    @property
    def support(self):
        return frozenset(k for k, n in enumerate(self.numerators) if n > 0)

    def label(self):
        return "/".join(str(n) for n in self.numerators)


def grid_points(k, eta):
    """Every point of the grid with k coordinates, in lexicographic order"""
    for cut in itertools.combinations(range(eta + k - 1), k - 1):
        bounds = (-1,) + cut + (eta + k - 1,)
        yield GridPoint(tuple(bounds[x + 1] - bounds[x] - 1 for x in range(k)), eta)


def _min_cost(targets, units):
    """
    Least Σ|t - n| over integers n >= 1 with Σ n = len(targets) + units

    Increments above the lower bound cost -1 while below t, then a single
    fractional step, then +1; taking them cheapest-first is optimal.
    """
    cost = 0.0
    free = 0
    fractions = []
    for t in targets:
        cost += abs(t - 1.0)
        if t > 1.0:
            whole = math.floor(t)
            free += whole - 1
            frac = t - whole
            if frac > 0.0:
                fractions.append(1.0 - 2.0 * frac)
    take = min(units, free)
    cost -= take
    units -= take
    for step in sorted(fractions):
        if units == 0:
            break
        cost += step
        units -= 1
    return cost + units


def project(b, eta):
    """
    L1-nearest grid point with the same support as b
    Args:
        b: Belief
        eta: grid resolution
    Returns:
        GridPoint; among equally near points the lexicographically smallest numerators
    Raises:
        EtaTooSmall when eta < |supp(b)|
    """
    probs = b.probs if isinstance(b, Belief) else np.asarray(b, dtype=float)
    support = sorted(Belief(probs).support) if not isinstance(b, Belief) else sorted(b.support)
    if eta < len(support):
        raise EtaTooSmall(f"eta={eta} cannot carry a support of size {len(support)}")
    targets = [float(probs[k]) * eta for k in support]
    best = _min_cost(targets, eta - len(support))
    numerators = [0] * len(probs)
    prefix_cost = 0.0
    remaining = eta
    for pos, k in enumerate(support[:-1]):
        rest = targets[pos + 1:]
        top = remaining - len(rest)

        def total(n):
            return prefix_cost + abs(targets[pos] - n) + _min_cost(rest, remaining - n - len(rest))

        # total is convex in n; find the first n that is optimal or past the optimum
        lo, hi = 1, top
        while lo < hi:
            mid = (lo + hi) // 2
            here = total(mid)
            if here <= best + COST_TOL or total(mid + 1) > here + COST_TOL:
                hi = mid
            else:
                lo = mid + 1
        numerators[k] = lo
        prefix_cost += abs(targets[pos] - lo)
        remaining -= lo
    numerators[support[-1]] = remaining
    return GridPoint(tuple(numerators), eta)
