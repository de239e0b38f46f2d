"""Exhaustive nearest-point decoding of PAM vectors from one real observation.

The estimator is the plain argmin over the product alphabet.  Large
alphabets are searched by meet-in-the-middle: the dimensions are split in
two halves, one half's sums are sorted, and for every point of the other
half the closest partner is found by bisection.  This visits the same
candidate set as brute force and returns the same argmin, including
lexicographic tie-breaking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .constellation import ENUMERATION_CAP, ConstellationSpec, EnumerationCapError
from .schemes import Frame, PrecodingPlan

__all__ = [
    "BRUTE_FORCE_LIMIT",
    "EffectiveChannel",
    "decode_destination",
    "decode_eaves_noise",
    "destination_truth",
    "effective_coeffs",
    "eaves_observation",
    "nearest_point_decode",
]

BRUTE_FORCE_LIMIT = 200_000


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Scalar channel ``y = delta * lam . a + noise`` seen by one receiver.

    ``entities[i]`` is ``(label, columns)``: entity ``i`` is the sum of the
    symbols in ``columns`` and lives on ``C(delta, theta[i] * Q)``.
    """

    lam: np.ndarray
    entities: tuple
    theta: np.ndarray

    @property
    def tau(self) -> int:
        return len(self.entities)

    def halfwidths(self, Q: int) -> list[int]:
        return [int(t) * Q for t in self.theta]


def _eaves_elimination(plan: PrecodingPlan, T):
    """Eliminate ``F`` through the tapped payloads ``S_T``.

    Returns ``(K, known)`` where ``F = K @ (S_T - known @ z)`` restricted to
    the uneliminated jamming columns; ``None`` when nothing is masked.
    """
    layout = plan.layout
    f_cols = layout.columns("F")
    if f_cols.size == 0:
        return None
    P_T = plan.payload_for(T).astype(float)
    Phi = P_T[:, f_cols]
    if Phi.shape[0] != Phi.shape[1]:
        raise ValueError(f"tapped set {T} gives {Phi.shape[0]} equations for {Phi.shape[1]} masks")
    return np.linalg.inv(Phi), P_T


def effective_coeffs(plan: PrecodingPlan, side: str = "destination", T=None) -> EffectiveChannel:
    """Coefficients of the decodable entities at one receiver.

    At the destination these are the messages plus, for the aligned schemes,
    one jamming sum per noise slot.  At the eavesdropper the observation is
    conditioned on ``V`` and the tapped payloads ``S_T`` (hence on ``F``),
    leaving only the jamming symbols.
    """
    layout = plan.layout
    if side == "destination":
        c = plan.y1_coeffs
        lam, theta = [], []
        for _, cols in plan.dest_groups:
            lam.append(float(np.mean(c[list(cols)])))
            theta.append(len(cols))
        return EffectiveChannel(np.array(lam), plan.dest_groups, np.array(theta))
    if side != "eavesdropper":
        raise ValueError(f"side must be 'destination' or 'eavesdropper', got {side!r}")
    if T is None:
        T = plan.cfg.wiretapped
    c = plan.y2_coeffs
    u_cols = layout.columns("U")
    f_cols = layout.columns("F")
    lam = c[u_cols].copy()
    elim = _eaves_elimination(plan, T)
    if elim is not None:
        K, P_T = elim
        # F = K (S_T - P_T[:, V] V - P_T[:, U] U)
        lam -= c[f_cols] @ K @ P_T[:, u_cols]
    entities = tuple(((layout.labels[col][0],) + layout.labels[col][1], (int(col),)) for col in u_cols)
    return EffectiveChannel(lam, entities, np.ones(len(u_cols), dtype=int))


def eaves_observation(frame: Frame, plan: PrecodingPlan, T=None) -> float:
    """``Y2`` with every ``V`` and ``S_T``-determined contribution removed."""
    layout = plan.layout
    if T is None:
        T = plan.cfg.wiretapped
    c = plan.y2_coeffs
    z = frame.z
    v_cols = layout.columns("V")
    f_cols = layout.columns("F")
    y = frame.Y2 - c[v_cols] @ z[v_cols]
    elim = _eaves_elimination(plan, T)
    if elim is not None:
        K, P_T = elim
        s_T = np.concatenate([frame.S[t - 1] for t in T])
        y -= c[f_cols] @ K @ (s_T - P_T[:, v_cols] @ z[v_cols])
    return float(y)


def _axis_sums(lam, delta, halfwidths):
    return [delta * l * np.arange(-h, h + 1, dtype=float) for l, h in zip(lam, halfwidths)]


def _unravel(flat: int, halfwidths) -> np.ndarray:
    idx = np.unravel_index(flat, [2 * h + 1 for h in halfwidths])
    return np.array(idx, dtype=np.int64) - np.asarray(halfwidths, dtype=np.int64)


def _grid(axes):
    if not axes:
        return np.zeros(1)
    return reduce(np.add.outer, axes).ravel()


def _brute(y, axes, halfwidths):
    d = np.abs(y - _grid(axes))
    return _unravel(int(np.argmin(d)), halfwidths)


def _mitm(y, axes, halfwidths, cap):
    sizes = [a.size for a in axes]
    total = math.prod(sizes)
    # split so the two halves are as balanced as possible
    split = min(range(1, len(axes)), key=lambda m: abs(math.prod(sizes[:m]) - math.sqrt(total)))
    nA, nB = math.prod(sizes[:split]), math.prod(sizes[split:])
    if max(nA, nB) > cap:
        raise EnumerationCapError(f"meet-in-the-middle halves {nA} x {nB} exceed cap {cap}")
    sA = _grid(axes[:split])
    sB = _grid(axes[split:])
    order = np.argsort(sB, kind="stable")
    sB_sorted = sB[order]
    r = y - sA
    pos = np.searchsorted(sB_sorted, r)
    lo = np.clip(pos - 1, 0, nB - 1)
    hi = np.clip(pos, 0, nB - 1)
    d_lo = np.abs(r - sB_sorted[lo])
    d_hi = np.abs(r - sB_sorted[hi])
    best = np.minimum(d_lo, d_hi)
    d_star = best.min()
    # the two halves round differently from the full sum, so every near-optimal
    # pair is re-scored exactly as brute force would score it
    tol = 1e-9 * (abs(y) + np.abs(sA).max() + np.abs(sB).max()) + d_star * 1e-9
    cands = []
    for a in np.flatnonzero(best <= d_star + tol):
        for b in np.flatnonzero(np.abs(r[a] - sB) <= d_star + tol):
            vec = np.concatenate([_unravel(int(a), halfwidths[:split]), _unravel(int(b), halfwidths[split:])])
            total = 0.0
            for ax, v, h in zip(axes, vec, halfwidths):
                total = total + ax[v + h]
            cands.append((abs(y - total), tuple(vec)))
    return np.array(min(cands)[1], dtype=np.int64)


def nearest_point_decode(y: float, lam, delta: float, halfwidths, *, cap: int = ENUMERATION_CAP,
                         method: str = "auto") -> np.ndarray:
    """Integer vector ``a`` minimising ``|y - delta * lam . a|`` over ``a_i in [-h_i, h_i]``.

    Ties go to the lexicographically smallest vector.  ``method`` is
    ``"brute"``, ``"mitm"`` or ``"auto"`` (brute force below
    ``BRUTE_FORCE_LIMIT`` points).  ``cap`` bounds the enumerated set: the
    whole product for brute force, each half for meet-in-the-middle.

    Raises
    ------
    EnumerationCapError
        If the alphabet is too large to search.
    """
    lam = np.asarray(lam, dtype=float)
    halfwidths = [int(h) for h in halfwidths]
    if lam.shape != (len(halfwidths),):
        raise ValueError("lam and halfwidths must have the same length")
    if not halfwidths:
        return np.zeros(0, dtype=np.int64)
    axes = _axis_sums(lam, delta, halfwidths)
    total = math.prod(2 * h + 1 for h in halfwidths)
    if method == "auto":
        method = "brute" if total <= BRUTE_FORCE_LIMIT or len(halfwidths) == 1 else "mitm"
    if method == "brute":
        if total > cap:
            raise EnumerationCapError(f"{total} candidate points exceed cap {cap}")
        return _brute(y, axes, halfwidths)
    if method == "mitm":
        if len(halfwidths) == 1:
            return _brute(y, axes, halfwidths)
        return _mitm(y, axes, halfwidths, cap)
    raise ValueError(f"unknown method {method!r}")


def destination_truth(frame: Frame, plan: PrecodingPlan) -> np.ndarray:
    """True integer value of every destination entity (messages, aligned sums)."""
    return np.array([int(frame.q[list(cols)].sum()) for _, cols in plan.dest_groups], dtype=np.int64)


def decode_destination(frame: Frame, plan: PrecodingPlan, spec: ConstellationSpec, **kw):
    """Decode the messages from ``Y1``.

    Returns
    -------
    v_hat : ndarray of int
        Estimated message indices, in layout order.
    error : bool
        True iff any message index is wrong.
    """
    eff = effective_coeffs(plan, "destination")
    a_hat = nearest_point_decode(frame.Y1, eff.lam, spec.delta, eff.halfwidths(spec.Q), **kw)
    v_idx = [i for i, (label, _) in enumerate(eff.entities) if label[0] == "V"]
    v_hat = a_hat[v_idx]
    v_true = frame.q[plan.layout.columns("V")]
    return v_hat, bool(np.any(v_hat != v_true))


def decode_eaves_noise(frame: Frame, plan: PrecodingPlan, spec: ConstellationSpec, T=None, **kw):
    """Decode the jamming vector from the eavesdropper's effective observation.

    The eavesdropper is handed ``V`` and ``S_T`` (worst case); the returned
    error flag is the event whose probability feeds the Fano bound.
    """
    eff = effective_coeffs(plan, "eavesdropper", T)
    y = eaves_observation(frame, plan, T)
    u_hat = nearest_point_decode(y, eff.lam, spec.delta, eff.halfwidths(spec.Q), **kw)
    u_true = frame.q[plan.layout.columns("U")]
    return u_hat, bool(np.any(u_hat != u_true))
