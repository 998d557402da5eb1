"""Explicit Doeblin certificates ε -> (m_ε, δ_ε) for ergodic and primitive games"""
import itertools
import logging
import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from beliefs.engine import forward_product
from games.spec import Step
from structure.coefficients import POSITIVE_TOL, birkhoff_coefficient, ergodicity_coefficient
from structure.patterns import PatternKind, minimal_uniform_length, product_alphabet
from utils.config import DEFAULT_ENUM_CAP
from utils.errors import CapExceeded, NotBlind, NotErgodic, NotPrimitive

logger = logging.getLogger(__name__)

REL_TOL = 1e-12


class DoeblinCertificate(BaseModel):
    """(ε, m_ε, δ_ε) with the data it was derived from"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    epsilon: float = Field(gt=0.0)
    m_eps: int = Field(ge=1)
    delta_eps: float = Field(gt=0.0, le=1.0)
    source: Literal["ergodic", "primitive", "user"]
    tau_bar: float = Field(default=0.0, ge=0.0, lt=1.0)
    base_length: int = Field(default=1, ge=1)
    mu_eps: Optional[float] = Field(default=None, gt=0.0)
    mu_method: Optional[Literal["exact", "lower_bound"]] = None
    strict: bool = False

    @model_validator(mode="after")
    def _primitive_has_mu(self):
        if self.source == "primitive" and self.mu_eps is None:
            raise ValueError("primitive certificates carry mu_eps")
        return self

    def formula_delta(self, n_action_pairs):
        """δ_ε recomputed from the certificate's own data"""
        if self.source == "ergodic":
            return float(n_action_pairs) ** (-self.m_eps)
        if self.source == "primitive":
            return (1.0 / n_action_pairs) ** (self.m_eps - 1) * self.mu_eps
        return self.delta_eps

    def consistent_with(self, spec):
        expected = self.formula_delta(spec.n_actions1 * spec.n_actions2)
        return abs(expected - self.delta_eps) <= REL_TOL * max(expected, self.delta_eps)


def _ceil(x):
    # float noise must not push an exact integer ratio up by one
    return max(1, math.ceil(x - 1e-12 * max(1.0, abs(x))))


def contraction_length(target, tau_bar, base):
    """Smallest multiple of base with tau_bar^(m/base) <= target; base itself when tau_bar is 0"""
    if tau_bar <= 0.0:
        logger.info("tau_bar is 0 at length %d; one block already contracts", base)
        return base
    return _ceil(math.log(target) / math.log(tau_bar)) * base


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")


def iter_products(spec, m, cap=DEFAULT_ENUM_CAP, stage="products"):
    """
    Yield (word, T(word)) over all words of length m in the product alphabet
    Raises:
        CapExceeded when the alphabet size to the power m exceeds cap
    """
    letters = product_alphabet(spec)
    count = len(letters) ** m
    if count > cap:
        raise CapExceeded(stage, count, cap)

    def walk(prefix, product, depth):
        if depth == m:
            yield prefix, product
            return
        for index, letter in enumerate(letters):
            yield from walk(prefix + (index,), product @ letter, depth + 1)

    yield from walk((), np.eye(spec.n_states), 0)


def max_coefficient(spec, m, kind, cap=DEFAULT_ENUM_CAP):
    """
    Largest τ_e or τ_p over all products of m alphabet matrices
    Args:
        spec: GameSpec
        m: product length
        kind: "tau_e" (blind games only) or "tau_p"
        cap: enumeration cap
    """
    if kind == "tau_e":
        if not spec.is_blind:
            raise NotBlind("tau_e products are defined for blind games")
        coefficient = ergodicity_coefficient
    elif kind == "tau_p":
        coefficient = birkhoff_coefficient
    else:
        raise ValueError(f"unknown coefficient kind {kind!r}")
    best = 0.0
    for _, product in iter_products(spec, m, cap, stage=f"max_coefficient[{kind}]"):
        best = max(best, coefficient(product))
        if best >= 1.0:
            break
    return best


def mu_lower_bound(spec, m):
    """
    Conservative lower bound on the smallest row sum of any length-m product

    l_1(k) = min over letters of row sum k; l_t = min over letters of P l_{t-1}.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    letters = np.stack(product_alphabet(spec))
    level = np.ones(spec.n_states)
    for _ in range(m):
        level = (letters @ level).min(axis=0)
    return float(level.min())


def mu_exact(spec, m, cap=DEFAULT_ENUM_CAP):
    """Smallest row sum over all length-m products, by enumeration"""
    return float(min(product.sum(axis=1).min()
                     for _, product in iter_products(spec, m, cap, stage="mu_exact")))


def is_markov_blind(spec, threshold=POSITIVE_TOL):
    """Blind game in which every P(i,j) has a column positive in every row"""
    if not spec.is_blind:
        return False
    return all(np.any(np.all(P > threshold, axis=0)) for P in product_alphabet(spec))


def ergodic_certificate(spec, eps, cap=DEFAULT_ENUM_CAP):
    """
    Certificate for a blind game whose long products are scrambling
    Args:
        spec: blind GameSpec
        eps: target precision in (0, 1)
        cap: enumeration cap for the τ_e maximum
    Returns:
        DoeblinCertificate with source "ergodic"
    """
    _check_eps(eps)
    if not spec.is_blind:
        raise NotBlind("ergodic certificates need a blind game")
    base = minimal_uniform_length(spec, PatternKind.SCRAMBLING)
    if base is None:
        raise NotErgodic("no product length up to 3^|K| is scrambling")
    tau_bar = max_coefficient(spec, base, "tau_e", cap)
    m_eps = contraction_length(eps / 2.0, tau_bar, base)
    delta = float(spec.n_actions1 * spec.n_actions2) ** (-m_eps)
    certificate = DoeblinCertificate(
        epsilon=eps, m_eps=m_eps, delta_eps=delta, source="ergodic",
        tau_bar=tau_bar, base_length=base,
    )
    logger.info("ergodic certificate: m_eps=%d delta_eps=%.3g", m_eps, delta)
    return certificate


def primitive_certificate(spec, eps, cap=DEFAULT_ENUM_CAP, strict=False):
    """
    Certificate for a game whose long products are entrywise positive
    Args:
        spec: GameSpec
        eps: target precision in (0, 1)
        cap: enumeration cap; μ is exact under it and a lower bound above it
        strict: target ε/2 so that the L1 contraction 2·τ_p stays within ε
    Returns:
        DoeblinCertificate with source "primitive"
    """
    _check_eps(eps)
    base = minimal_uniform_length(spec, PatternKind.POSITIVE)
    if base is None:
        raise NotPrimitive("no product length up to 2^|K| is positive")
    tau_bar = max_coefficient(spec, base, "tau_p", cap)
    target = eps / 2.0 if strict else eps
    m_eps = contraction_length(target, tau_bar, base)
    n_letters = len(product_alphabet(spec))
    if n_letters ** m_eps <= cap:
        mu, method = mu_exact(spec, m_eps, cap), "exact"
    else:
        mu, method = mu_lower_bound(spec, m_eps), "lower_bound"
    pairs = spec.n_actions1 * spec.n_actions2
    delta = (1.0 / pairs) ** (m_eps - 1) * mu
    certificate = DoeblinCertificate(
        epsilon=eps, m_eps=m_eps, delta_eps=delta, source="primitive",
        tau_bar=tau_bar, base_length=base, mu_eps=mu, mu_method=method, strict=strict,
    )
    logger.info("primitive certificate: m_eps=%d mu=%.3g (%s) delta_eps=%.3g", m_eps, mu, method, delta)
    return certificate


# ========== WITNESS HISTORY ==========
def witness_history(spec, sigma, tau, m_eps, signal=0):
    """
    History of m_eps - 1 steps along which both players put at least uniform mass

    At each stage the most likely action of each player is taken (ties to the lower
    index) and the signal stays fixed.
    """
    history = ()
    for _ in range(m_eps - 1):
        x = sigma.mixture(history=history)
        y = tau.mixture(history=history)
        history = history + (Step(int(np.argmax(x)), int(np.argmax(y)), signal),)
    return history


def history_probability(spec, b, sigma, tau, h):
    """P(H = h) from belief b under the strategy pair"""
    weight = 1.0
    for m, step in enumerate(h):
        prefix = h[:m]
        weight *= sigma.mixture(history=prefix)[step.i] * tau.mixture(history=prefix)[step.j]
    probs = b.probs if hasattr(b, "probs") else np.asarray(b)
    return float(weight * probs @ forward_product(spec, h).sum(axis=1))


def enumerate_words(spec, m):
    """All length-m histories over the full alphabet, as Step tuples"""
    if spec.is_blind:
        letters = [Step(i, j, 0) for i in range(spec.n_actions1) for j in range(spec.n_actions2)]
    else:
        letters = list(spec.alphabet)
    return itertools.product(letters, repeat=m)
