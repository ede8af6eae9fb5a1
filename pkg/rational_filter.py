import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

logger = logging.getLogger(__name__)

# Purpose: Rational filters obtained by discretizing the Cauchy integral of the
# indicator function of [alpha, beta] on the circle that has [alpha, beta] as diameter.
#
#     rho(z) = 2 Re sum_l w_l / (z - zeta_l)
#
# Only the poles with positive imaginary part are stored; their conjugates carry the
# conjugate weights, so every filtered operator built from them is real.

MIDPOINT = "midpoint"
GAUSS_LEGENDRE = "gauss-legendre"
RULES = (MIDPOINT, GAUSS_LEGENDRE)


@dataclass(frozen=True)
class RationalFilter:
    alpha: float
    beta: float
    poles: np.ndarray  # complex, Im > 0
    weights: np.ndarray  # complex
    rule: str

    @property
    def n_nodes(self) -> int:
        return int(self.poles.size)

    @property
    def center(self) -> float:
        return 0.5 * (self.alpha + self.beta)

    @property
    def radius(self) -> float:
        return 0.5 * (self.beta - self.alpha)

    def nodes(self):
        """(pole, weight) pairs in fixed order."""
        return list(zip(self.poles.tolist(), self.weights.tolist()))


def _check_interval(alpha: float, beta: float, n_nodes: int) -> None:
    if not np.isfinite(alpha) or not np.isfinite(beta) or not alpha < beta:
        raise ValueError(f"degenerate interval [{alpha}, {beta}]")
    if n_nodes < 1:
        raise ValueError(f"N_c must be >= 1, got {n_nodes}")


def midpoint_filter(alpha: float, beta: float, n_nodes: int) -> RationalFilter:
    """Midpoint rule of order 2*N_c on the circle, upper-half nodes kept.

    theta_k = (2k - 1) pi / (2 N_c), zeta_k = c + r e^{i theta_k},
    w_k = -r e^{i theta_k} / (2 N_c).
    """
    _check_interval(alpha, beta, n_nodes)
    center, radius = 0.5 * (alpha + beta), 0.5 * (beta - alpha)
    theta = (2 * np.arange(1, n_nodes + 1) - 1) * np.pi / (2 * n_nodes)
    arc = radius * np.exp(1j * theta)
    return RationalFilter(alpha=float(alpha), beta=float(beta), poles=center + arc,
                          weights=-arc / (2 * n_nodes), rule=MIDPOINT)


def gauss_legendre_filter(alpha: float, beta: float, n_nodes: int) -> RationalFilter:
    """Gauss-Legendre rule on the upper half-circle.

    The Legendre nodes x in (-1, 1) map to theta = pi (1 - x) / 2 in (0, pi); the lower
    half-arc is the mirror image, so the pole set is closed under conjugation.
    """
    _check_interval(alpha, beta, n_nodes)
    center, radius = 0.5 * (alpha + beta), 0.5 * (beta - alpha)
    x, w = leggauss(n_nodes)
    theta = 0.5 * np.pi * (1.0 - x)
    arc = radius * np.exp(1j * theta)
    return RationalFilter(alpha=float(alpha), beta=float(beta), poles=center + arc,
                          weights=-arc * w / 4.0, rule=GAUSS_LEGENDRE)


def make_filter(rule: str, alpha: float, beta: float, n_nodes: int) -> RationalFilter:
    if rule == MIDPOINT:
        return midpoint_filter(alpha, beta, n_nodes)
    if rule == GAUSS_LEGENDRE:
        return gauss_legendre_filter(alpha, beta, n_nodes)
    raise ValueError(f"unknown quadrature rule '{rule}', expected one of {RULES}")


def eval_filter(f: RationalFilter, z):
    """rho(z) for a real scalar or array z."""
    z = np.asarray(z, dtype=np.float64)
    terms = f.weights / (z[..., None] - f.poles)
    values = 2.0 * np.real(terms.sum(axis=-1))
    return float(values) if values.ndim == 0 else values


def full_sum(f: RationalFilter, z):
    """Sum over all 2*N_c poles (stored ones and their conjugates), kept complex."""
    z = np.asarray(z, dtype=np.float64)[..., None]
    upper = f.weights / (z - f.poles)
    lower = np.conj(f.weights) / (z - np.conj(f.poles))
    return (upper + lower).sum(axis=-1)


def filter_samples(f: RationalFilter, lo: float, hi: float, num: int = 401,
                   scaled: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """(z, |rho(z)|) on a uniform grid.

    With ``scaled`` the samples are rescaled so that rho(alpha) = rho(beta) = 1/2. This
    only affects plotting; the solvers never rescale.
    """
    if num < 2:
        raise ValueError(f"need at least 2 samples, got {num}")
    if not lo < hi:
        raise ValueError(f"empty sampling range [{lo}, {hi}]")
    grid = np.linspace(lo, hi, num)
    values = np.abs(eval_filter(f, grid))
    if scaled:
        edge = abs(eval_filter(f, f.alpha))
        values = values * (0.5 / edge)
    logger.debug(f"Sampled {f.rule} filter (N_c={f.n_nodes}) at {num} points on [{lo}, {hi}]")
    return grid, values
