"""Leakage probes: beamforming residuals, exact link leakage, masking and
Fano-type bounds on what the eavesdropper learns.
"""

from __future__ import annotations

import math

import numpy as np

from .constellation import ENUMERATION_CAP, ConstellationSpec, EnumerationCapError, symbol_variance
from .decode import nearest_point_decode
from .field import GeneratorMatrix
from .schemes import Frame, PrecodingPlan, SchemeConfig, payload_structure

__all__ = [
    "alignment_spread",
    "cancellation_residuals",
    "entropy_bits",
    "exact_mi_links",
    "fano_leak_bound",
    "link_entropies",
    "posterior_equivocation",
    "recover_fictitious",
    "snc_mask_bound",
    "y2_variance",
]


def cancellation_residuals(plan: PrecodingPlan) -> tuple[float, float]:
    """Largest destination coefficient of any ``F`` and of any nulled ``U``.

    Both are relative to the largest message coefficient; a scheme with no
    such symbols reports 0.
    """
    c = np.abs(plan.y1_coeffs)
    layout = plan.layout
    ref = c[layout.columns("V")].max()
    f_cols = layout.columns("F")
    f_res = float(c[f_cols].max() / ref) if f_cols.size else 0.0
    u_null = np.intersect1d(plan.beamformed, layout.columns("U"))
    u_res = float(c[u_null].max() / ref) if u_null.size else 0.0
    return f_res, u_res


def alignment_spread(plan: PrecodingPlan) -> float:
    """Worst relative spread of destination coefficients inside one aligned group."""
    c = plan.y1_coeffs
    worst = 0.0
    for _, cols in plan.dest_groups:
        vals = c[list(cols)]
        if len(vals) > 1:
            worst = max(worst, float(np.ptp(vals) / np.abs(vals).max()))
    return worst


def entropy_bits(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def _joint_enumeration(n_dims: int, Q: int, cap: int) -> np.ndarray:
    size = (2 * Q + 1) ** n_dims
    if size > cap:
        raise EnumerationCapError(f"{size} joint symbol outcomes exceed cap {cap}")
    axis = np.arange(-Q, Q + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * n_dims), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1) if n_dims else np.zeros((1, 0), dtype=np.int64)


def _row_entropy(rows: np.ndarray) -> float:
    if rows.shape[1] == 0:
        return 0.0
    _, counts = np.unique(rows, axis=0, return_counts=True)
    return entropy_bits(counts)


def link_entropies(cfg: SchemeConfig, gamma: GeneratorMatrix | None, Q: int, T, *, cap: int = ENUMERATION_CAP):
    """Exact ``(H(S_T), H(S_T, V), H(V))`` in bits over the symbols ``S_T`` touches."""
    layout, payloads = payload_structure(cfg, gamma)
    rows = [payloads[t - 1] for t in T]
    P_T = np.vstack(rows) if rows else np.zeros((0, layout.n), dtype=np.int64)
    used = np.flatnonzero(np.any(P_T != 0, axis=0))
    if used.size == 0:
        return 0.0, 0.0, 0.0
    q = _joint_enumeration(used.size, Q, cap)
    s = q @ P_T[:, used].T
    is_v = layout.kinds[used] == "V"
    v = q[:, is_v]
    h_s = _row_entropy(s)
    h_sv = _row_entropy(np.hstack([s, v]))
    h_v = _row_entropy(v)
    return h_s, h_sv, h_v


def exact_mi_links(cfg: SchemeConfig, gamma: GeneratorMatrix | None, Q: int, T, *,
                   cap: int = ENUMERATION_CAP) -> float:
    """``I(V; S_T)`` in bits by brute-force enumeration of every symbol outcome.

    ``T`` is a 1-based set of tapped relays with ``|T| = W``.
    """
    T = tuple(T)
    if len(T) != cfg.W:
        raise ValueError(f"|T| must equal W={cfg.W}, got {T}")
    h_s, h_sv, h_v = link_entropies(cfg, gamma, Q, T, cap=cap)
    return max(0.0, h_s + h_v - h_sv)


def snc_mask_bound(cfg: SchemeConfig, Q: int, p: int | None) -> float:
    """Closed-form bound on ``I(V; S_T)``, uniform over every ``|T| = W``."""
    W, M = cfg.W, cfg.M
    if not cfg.scheme.is_snc or W == 0:
        return 0.0
    if cfg.scheme.is_coj:
        n = 2 * W
        width = 2 * (W * (p - 1) + 1) * Q
    else:
        n = W * (M - 1)
        width = (W * (M - 1) * (p - 1) + 1) * Q
    return n * math.log2((2 * width + 1) / (2 * Q + 1))


def recover_fictitious(frame: Frame, plan: PrecodingPlan, T) -> np.ndarray:
    """Reconstruct ``F`` from ``S_T`` given ``V`` and ``U`` by inverting ``Gamma_T``."""
    layout = plan.layout
    f_cols = layout.columns("F")
    if f_cols.size == 0:
        return np.zeros(0)
    P_T = plan.payload_for(tuple(T)).astype(float)
    known = np.setdiff1d(np.arange(layout.n), f_cols)
    s_T = np.concatenate([frame.S[t - 1] for t in T])
    rhs = s_T - P_T[:, known] @ frame.z[known]
    return np.linalg.solve(P_T[:, f_cols], rhs)


def y2_variance(plan: PrecodingPlan, spec: ConstellationSpec, noise_var: float = 1.0) -> float:
    """Analytic variance of ``Y2`` for independent uniform symbols."""
    c = plan.y2_coeffs
    return float(c @ c * symbol_variance(spec.delta, spec.Q) + noise_var)


def fano_leak_bound(p_e: float, Q: int, tau: int, var_y2: float) -> float:
    """Upper bound (bits per use) on ``I(V; Y2 | S_T)``.

    ``0.5 log2(var_y2)`` bounds ``h(Y2) - h(Z2)``; the jamming entropy
    ``tau log2(2Q+1)`` is subtracted and the Fano bound
    ``1 + p_e tau log2(2Q+1)`` on the residual jamming uncertainty added.
    """
    if not 0.0 <= p_e <= 1.0:
        raise ValueError(f"p_e must lie in [0, 1], got {p_e}")
    if var_y2 <= 0:
        return 0.0
    h_u = tau * math.log2(2 * Q + 1)
    return max(0.0, 0.5 * math.log2(var_y2) - h_u + 1.0 + p_e * h_u)


def posterior_equivocation(lam, delta: float, halfwidths, n_samples: int, rng: np.random.Generator,
                           noise_std: float = 1.0):
    """Monte-Carlo ``H(A | Y)`` from exact posteriors, and the ML error rate.

    For small alphabets only: every sample evaluates the Gaussian likelihood
    of every candidate point.
    """
    lam = np.asarray(lam, dtype=float)
    axes = [np.arange(-h, h + 1) for h in halfwidths]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    if pts.shape[0] > 10**5:
        raise EnumerationCapError("posterior enumeration is meant for small alphabets")
    means = delta * pts @ lam
    idx = rng.integers(0, pts.shape[0], size=n_samples)
    y = means[idx] + noise_std * rng.standard_normal(n_samples)
    H = 0.0
    errors = 0
    for yi, ii in zip(y, idx):
        ll = -0.5 * ((yi - means) / noise_std) ** 2
        ll -= ll.max()
        w = np.exp(ll)
        post = w / w.sum()
        H += -math.log2(post[ii]) if post[ii] > 0 else 0.0
        a = nearest_point_decode(yi, lam, delta, halfwidths)
        errors += bool(np.any(a != pts[ii]))
    return H / n_samples, errors / n_samples

