"""Power sweeps, trial aggregation, d.o.f. slope fits and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import draw_state
from .constellation import scale_params
from .decode import decode_destination, decode_eaves_noise
from .schemes import (
    SchemeConfig,
    amplitude_bound,
    build_generator,
    build_plan,
    draw_coefficients,
    encode_frame,
    payload_alphabet_size,
    payload_structure,
    rate_bits,
    required_link_dof,
    rho_bound,
    scheme_tau,
    wiretap_sets,
)
from .secrecy import fano_leak_bound, snc_mask_bound, y2_variance

__all__ = ["SweepRecord", "fit_dof", "record_rows", "run_trials", "sweep", "write_csv"]

log = logging.getLogger(__name__)

_COEFF_STREAM = 0
_TRIAL_STREAM = 1


@dataclass(frozen=True)
class SweepRecord:
    scheme: str
    M: int
    N: int
    W: int
    epsilon: float
    B: float
    P: float
    Q: int
    delta: float
    rate_bits: float
    dof_est: float
    alpha_used: float
    p_e_dest: float
    p_e_eaves: float
    leak_bits_bound: float
    leak_dof_bound: float
    trials: int
    seed: int


def _rng(seed: int, *key: int) -> np.random.Generator:
    # counter-based: trial t always gets the same stream, whatever the trial count
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _plan_setup(cfg: SchemeConfig, seed: int):
    gamma = build_generator(cfg)
    frozen = draw_coefficients(cfg, _rng(seed, _COEFF_STREAM)) if cfg.freeze_coeffs else None
    return gamma, frozen


def _one_trial(cfg, spec, gamma, frozen, T_sets, seed, t, noise_std):
    rng = _rng(seed, _TRIAL_STREAM, t)
    ch = draw_state(cfg.M, cfg.B, rng, cfg.fading)
    coeffs = frozen if frozen is not None else draw_coefficients(cfg, rng)
    plan = build_plan(cfg, ch, gamma, coeffs=coeffs)
    if plan.rho_max > 0 and max(abs(r) for r in plan.rho.values()) > plan.rho_max * (1 + 1e-12):
        raise RuntimeError("realised masking precoder exceeds its bound")
    frame = encode_frame(plan, spec, rng, noise_std=noise_std)
    _, err_d = decode_destination(frame, plan, spec)
    err_e = [decode_eaves_noise(frame, plan, spec, T)[1] for T in T_sets]
    return err_d, err_e, y2_variance(plan, spec)


def run_trials(cfg: SchemeConfig, P: float, trials: int, seed: int, *, noiseless: bool = False,
               workers: int = 1) -> SweepRecord:
    """Simulate ``trials`` independent channel uses at power ``P``.

    The record is a deterministic function of ``(cfg, P, trials, seed)``:
    trial ``t`` draws from its own counter-derived stream and results are
    reduced in trial order, so ``workers`` does not change the output.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    gamma, frozen = _plan_setup(cfg, seed)
    p = gamma.p if gamma is not None else None
    gt = amplitude_bound(cfg, rho_bound(cfg, gamma, frozen), p)
    tau = scheme_tau(cfg)
    spec = scale_params(P, tau, cfg.epsilon, gt)
    T_sets = wiretap_sets(cfg)
    noise_std = 0.0 if noiseless else 1.0

    def work(t):
        return _one_trial(cfg, spec, gamma, frozen, T_sets, seed, t, noise_std)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(trials)))
    else:
        results = [work(t) for t in range(trials)]

    err_dest = sum(r[0] for r in results)
    err_eaves = np.sum([r[1] for r in results], axis=0)
    var_y2 = float(np.mean([r[2] for r in results]))
    p_e_dest = err_dest / trials
    # the tapped set the eavesdropper decodes best is the worst case
    p_e_eaves = float(err_eaves.min()) / trials

    half_log_p = 0.5 * math.log2(P)
    rate = rate_bits(cfg, spec.Q)
    _, payloads = payload_structure(cfg, gamma)
    alpha = required_link_dof([payload_alphabet_size(S, spec.Q) for S in payloads], P)
    n_u = cfg.N if cfg.scheme.is_coj else cfg.M * cfg.N
    leak = snc_mask_bound(cfg, spec.Q, p) + fano_leak_bound(p_e_eaves, spec.Q, n_u, var_y2)
    rec = SweepRecord(
        scheme=cfg.scheme.value, M=cfg.M, N=cfg.N, W=cfg.W, epsilon=cfg.epsilon, B=cfg.B,
        P=float(P), Q=spec.Q, delta=spec.delta, rate_bits=rate, dof_est=rate / half_log_p,
        alpha_used=alpha, p_e_dest=p_e_dest, p_e_eaves=p_e_eaves,
        leak_bits_bound=leak, leak_dof_bound=leak / half_log_p, trials=trials, seed=int(seed),
    )
    log.info("%s M=%d N=%d P=%.3g Q=%d p_e_dest=%.4f p_e_eaves=%.4f", rec.scheme, rec.M, rec.N,
             rec.P, rec.Q, rec.p_e_dest, rec.p_e_eaves)
    return rec


def _sub_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1, dtype=np.uint32)[0])


def sweep(cfg: SchemeConfig, P_list, trials: int, seed: int, *, noiseless: bool = False,
          workers: int = 1, parallel_points: bool = False) -> list[SweepRecord]:
    """One ``run_trials`` record per power, each with an independent sub-seed."""
    P_list = [float(P) for P in P_list]
    if not P_list:
        raise ValueError("P_list must not be empty")
    if any(b <= a for a, b in zip(P_list, P_list[1:])):
        raise ValueError("P_list must be strictly ascending")
    jobs = [(P, _sub_seed(seed, i)) for i, P in enumerate(P_list)]

    def point(job):
        return run_trials(cfg, job[0], trials, job[1], noiseless=noiseless, workers=workers)

    if parallel_points:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            return list(pool.map(point, jobs))
    return [point(j) for j in jobs]


def fit_dof(records) -> tuple[float, float]:
    """Least-squares slope of ``rate_bits`` against ``0.5 log2 P``.

    Returns the slope and the RMS residual of the straight-line fit.
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError("need at least two records to fit a slope")
    keys = {(r.scheme, r.M, r.N, r.epsilon, r.B) for r in records}
    if len(keys) > 1:
        raise ValueError("records come from different configurations")
    x = np.array([0.5 * math.log2(r.P) for r in records])
    y = np.array([r.rate_bits for r in records])
    if np.ptp(x) == 0:
        raise ValueError("all records share the same power")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def record_rows(records):
    names = [f.name for f in dataclasses.fields(SweepRecord)]
    yield names
    for r in records:
        yield [_fmt(getattr(r, n)) for n in names]


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(record_rows(records))
