"""PAM constellations and their power-dependent scaling.

``C(delta, Q)`` is the set ``delta * {-Q, ..., Q}``.  Symbols are carried
around as integer indices ``q`` and scaled by ``delta`` only when a real
value is needed, so payload algebra stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = [
    "ENUMERATION_CAP",
    "ConstellationSpec",
    "EnumerationCapError",
    "min_distance_bruteforce",
    "sample_indices",
    "sample_symbol",
    "scale_params",
    "symbol_variance",
]

ENUMERATION_CAP = 10**7


class EnumerationCapError(RuntimeError):
    """Raised when an exhaustive enumeration would exceed its size cap."""


@dataclass(frozen=True)
class ConstellationSpec:
    """PAM parameters for one transmit power.

    Attributes
    ----------
    Q : int
        Constellation half-width; the alphabet has ``2Q+1`` points.
    delta : float
        Point spacing.
    gamma : float
        Power headroom factor, ``1 / gamma_tilde``.
    gamma_tilde : float
        Amplitude bound of the scheme: ``|X_k| <= gamma_tilde * delta * Q``.
    tau : int
        Number of independent dimensions the scaling is tuned for.
    epsilon : float
        d.o.f. slack.
    P : float
        Transmit power.
    """

    Q: int
    delta: float
    gamma: float
    gamma_tilde: float
    tau: int
    epsilon: float
    P: float

    @property
    def n_points(self) -> int:
        return 2 * self.Q + 1

    @property
    def max_amplitude(self) -> float:
        return self.gamma_tilde * self.delta * self.Q


def scale_params(P: float, tau: int, epsilon: float, gamma_tilde: float) -> ConstellationSpec:
    """Choose ``Q = floor(P**((1-eps)/(2(tau+eps))))`` and ``delta = gamma*sqrt(P)/Q``."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if P <= 0 or gamma_tilde <= 0:
        raise ValueError("P and gamma_tilde must be positive")
    exponent = (1.0 - epsilon) / (2.0 * (tau + epsilon))
    # the relative nudge keeps exact integer powers (e.g. 10**0.5 squared) from flooring down
    Q = math.floor(P**exponent * (1 + 1e-12))
    if Q < 1:
        raise ValueError(f"power P={P} too small: Q would be {Q}")
    gamma = 1.0 / gamma_tilde
    delta = gamma * math.sqrt(P) / Q
    return ConstellationSpec(Q=Q, delta=delta, gamma=gamma, gamma_tilde=gamma_tilde,
                             tau=tau, epsilon=epsilon, P=P)


def sample_indices(Q: int, rng: np.random.Generator, size=None):
    """Uniform integer indices on ``{-Q, ..., Q}``."""
    return rng.integers(-Q, Q + 1, size=size)


def sample_symbol(spec: ConstellationSpec, rng: np.random.Generator) -> float:
    return spec.delta * int(sample_indices(spec.Q, rng))


def symbol_variance(delta: float, Q: int) -> float:
    """Variance ``delta**2 Q(Q+1)/3`` of a uniform symbol on ``C(delta, Q)``."""
    return delta * delta * Q * (Q + 1) / 3.0


def _enumeration_size(halfwidths, spread: int) -> int:
    return math.prod(spread * int(h) + 1 for h in halfwidths)


def min_distance_bruteforce(lam, delta: float, halfwidths, cap: int = ENUMERATION_CAP) -> float:
    """Exact minimum distance of the sum constellation ``{delta * sum(lam_i a_i)}``.

    Enumerates every nonzero integer difference vector ``q`` with
    ``|q_i| <= 2*halfwidths[i]`` and returns ``min |delta * lam . q|``.

    Raises
    ------
    EnumerationCapError
        If the number of difference vectors exceeds ``cap``.
    """
    lam = np.asarray(lam, dtype=float)
    halfwidths = [int(h) for h in halfwidths]
    if lam.shape != (len(halfwidths),):
        raise ValueError("lam and halfwidths must have the same length")
    if any(h < 1 for h in halfwidths):
        raise ValueError("halfwidths must be positive")
    size = _enumeration_size(halfwidths, 4)
    if size > cap:
        raise EnumerationCapError(f"{size} difference vectors exceed cap {cap}")
    axes = [l * np.arange(-2 * h, 2 * h + 1, dtype=float) for l, h in zip(lam, halfwidths)]
    sums = reduce(np.add.outer, axes).ravel()
    # the zero difference vector sits at the centre of the C-ordered grid
    sums[size // 2] = np.inf
    return float(abs(delta) * np.min(np.abs(sums)))
