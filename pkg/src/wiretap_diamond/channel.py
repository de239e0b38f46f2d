"""Bounded real fading and the two multiple-access outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FADING_DENSITIES", "ChannelDraw", "draw_gains", "draw_state", "mac_output"]

FADING_DENSITIES = ("uniform", "log-uniform")


@dataclass(frozen=True, eq=False)
class ChannelDraw:
    """Legitimate gains ``h`` and eavesdropper gains ``g`` for one channel use."""

    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        for name in ("h", "g"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.h.shape != self.g.shape or self.h.ndim != 1:
            raise ValueError("h and g must be 1-D arrays of equal length")

    @property
    def M(self) -> int:
        return self.h.shape[0]

    def within_bound(self, B: float) -> bool:
        mags = np.abs(np.concatenate([self.h, self.g]))
        return bool(np.all(mags >= 1.0 / B) and np.all(mags <= B))


def draw_gains(M: int, B: float, rng: np.random.Generator, density: str = "uniform") -> np.ndarray:
    """``M`` i.i.d. gains with magnitude in ``[1/B, B]`` and a fair random sign."""
    if B <= 1:
        raise ValueError(f"gain bound B must exceed 1, got {B}")
    if density == "uniform":
        mag = rng.uniform(1.0 / B, B, size=M)
    elif density == "log-uniform":
        mag = np.exp(rng.uniform(-np.log(B), np.log(B), size=M))
    else:
        raise ValueError(f"unknown fading density {density!r}; expected one of {FADING_DENSITIES}")
    sign = rng.choice((-1.0, 1.0), size=M)
    return sign * mag


def draw_state(M: int, B: float, rng: np.random.Generator, density: str = "uniform") -> ChannelDraw:
    h = draw_gains(M, B, rng, density)
    g = draw_gains(M, B, rng, density)
    return ChannelDraw(h, g)


def mac_output(x, gains, noise_std: float = 1.0, rng: np.random.Generator | None = None) -> float:
    """``sum_k gains_k x_k + z`` with ``z ~ N(0, noise_std**2)``.

    No random numbers are consumed when ``noise_std == 0``.
    """
    x = np.asarray(x, dtype=float)
    gains = np.asarray(gains, dtype=float)
    if x.shape != gains.shape:
        raise ValueError(f"length mismatch: {x.shape} inputs vs {gains.shape} gains")
    y = float(gains @ x)
    if noise_std > 0:
        if rng is None:
            raise ValueError("a generator is required for noisy outputs")
        y += noise_std * rng.standard_normal()
    return y
