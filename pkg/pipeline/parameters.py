"""Block counts and recall from a Doeblin certificate"""
import logging
import math

logger = logging.getLogger(__name__)


def _ceil(x):
    return math.ceil(x - 1e-12 * max(1.0, abs(x)))


def compute_parameters(eps, m_eps, delta_eps, k_count):
    """
    Number of sub-blocks per block (ω_ε) and recall (η_ε)
    Args:
        eps: precision in (0, 1)
        m_eps: certificate length
        delta_eps: certificate probability in (0, 1]
        k_count: number of states
    Returns:
        (omega_eps, eta_eps) with eta_eps = omega_eps * m_eps * ceil(1/eps)^2
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < delta_eps <= 1.0:
        raise ValueError("delta_eps must lie in (0, 1]")
    if m_eps < 1 or k_count < 1:
        raise ValueError("m_eps and k_count must be positive")
    coverage = k_count ** 2 / m_eps
    if delta_eps >= 1.0:
        logger.info("delta_eps = 1: a single sub-block resets surely")
        omega = _ceil(coverage)
    else:
        omega = _ceil(max(math.log(eps) / math.log1p(-delta_eps ** 2), coverage))
    omega = max(1, omega)
    eta = omega * m_eps * _ceil(1.0 / eps) ** 2
    return omega, eta
