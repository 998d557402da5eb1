"""Ergodicity (τ_e) and Birkhoff (τ_p) contraction coefficients"""
import numpy as np

from utils.errors import NotStochastic

POSITIVE_TOL = 1e-15
STOCHASTIC_TOL = 1e-10


def ergodicity_coefficient(P, tol=STOCHASTIC_TOL):
    """
    Half the largest L1 distance between two rows of a stochastic matrix

    Parameters
    ----------
    P : array_like
        Row-stochastic square matrix
    tol : float
        Allowed deviation of row sums and entries

    Returns
    -------
    float in [0, 1]
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotStochastic("matrix must be square")
    if np.any(P < -tol) or np.any(np.abs(P.sum(axis=1) - 1.0) > tol):
        raise NotStochastic("matrix is not row-stochastic")
    diffs = np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    return float(min(1.0, 0.5 * diffs.max()))


def birkhoff_coefficient(P, threshold=POSITIVE_TOL):
    """
    Birkhoff contraction coefficient (1 - √ψ)/(1 + √ψ) of a nonnegative matrix

    ψ is the smallest cross ratio P[k,a] P[l,b] / (P[l,a] P[k,b]); any entry at or
    below the threshold makes the coefficient 1.
    """
    P = np.asarray(P, dtype=float)
    if P.size == 0 or P.min() <= threshold:
        return 1.0
    # ratios[k, l, a, b] = P[k,a] P[l,b] / (P[l,a] P[k,b])
    numer = P[:, None, :, None] * P[None, :, None, :]
    denom = P[None, :, :, None] * P[:, None, None, :]
    psi = float(min(1.0, (numer / denom).min()))
    root = np.sqrt(psi)
    return float((1.0 - root) / (1.0 + root))


def is_positive(P, threshold=POSITIVE_TOL):
    return bool(np.all(np.asarray(P) > threshold))


def is_scrambling(P, threshold=POSITIVE_TOL):
    """Every two rows share a column where both are positive"""
    bits = (np.asarray(P) > threshold).astype(np.int64)
    return bool(np.all(bits @ bits.T > 0))
