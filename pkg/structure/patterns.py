"""Zero patterns of matrix products and the search for a uniform product length"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from structure.coefficients import POSITIVE_TOL
from utils.errors import NotBlind

logger = logging.getLogger(__name__)


class PatternKind(str, Enum):
    SCRAMBLING = "scrambling"
    POSITIVE = "positive"


@dataclass(frozen=True)
class PatternMatrix:
    """Positivity pattern of a square matrix; row k is a bitmask over columns"""

    rows: tuple

    @classmethod
    def from_matrix(cls, P, threshold=POSITIVE_TOL):
        bits = np.asarray(P) > threshold
        return cls(tuple(int(sum(1 << c for c in np.flatnonzero(row))) for row in bits))

    @property
    def size(self):
        return len(self.rows)

    def to_array(self):
        n = self.size
        return np.array([[(row >> c) & 1 for c in range(n)] for row in self.rows], dtype=bool)

    def __matmul__(self, other):
        # row k of the product is the union of other's rows over the support of row k
        out = []
        for row in self.rows:
            acc = 0
            c = 0
            while row:
                if row & 1:
                    acc |= other.rows[c]
                row >>= 1
                c += 1
            out.append(acc)
        return PatternMatrix(tuple(out))

    def is_positive(self):
        full = (1 << self.size) - 1
        return all(row == full for row in self.rows)

    def is_scrambling(self):
        rows = self.rows
        return all(rows[a] & rows[b] for a in range(len(rows)) for b in range(a, len(rows)))

    def satisfies(self, kind):
        return self.is_positive() if PatternKind(kind) is PatternKind.POSITIVE else self.is_scrambling()


def product_alphabet(spec):
    """Matrices the products range over: P(i,j) when blind, P(i,j,s) otherwise"""
    if spec.is_blind:
        return [spec.matrices[i, j, 0] for i in range(spec.n_actions1) for j in range(spec.n_actions2)]
    return [spec.matrices[st.i, st.j, st.s] for st in spec.alphabet]


def default_bound(spec, kind):
    k = spec.n_states
    return 2 ** k if PatternKind(kind) is PatternKind.POSITIVE else 3 ** k


def minimal_uniform_length(spec, kind, bound=None):
    """
    Smallest m such that every length-m product is positive (or scrambling)

    Works on the set of reachable zero patterns per length; the sets are
    memoized, and a repeated set means no longer length can succeed.

    Args:
        spec: GameSpec
        kind: "positive" or "scrambling" (scrambling needs a blind game)
        bound: largest length to try; 2^|K| or 3^|K| by default
    Returns:
        m* or None
    """
    kind = PatternKind(kind)
    if kind is PatternKind.SCRAMBLING and not spec.is_blind:
        raise NotBlind("scrambling search is defined for blind games")
    bound = default_bound(spec, kind) if bound is None else bound
    letters = sorted(set(PatternMatrix.from_matrix(P) for P in product_alphabet(spec)), key=lambda p: p.rows)
    level = frozenset(letters)
    seen = set()
    for m in range(1, bound + 1):
        if all(p.satisfies(kind) for p in level):
            logger.info("%s at product length %d", kind.value, m)
            return m
        if level in seen:
            logger.info("pattern sets cycle at length %d without %s", m, kind.value)
            return None
        seen.add(level)
        level = frozenset(p @ letter for p in level for letter in letters)
    return None
