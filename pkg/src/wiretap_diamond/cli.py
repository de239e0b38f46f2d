"""Command-line entry point: ``simulate``, ``dof-curve`` and ``verify``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from fractions import Fraction

import numpy as np

from .channel import FADING_DENSITIES, draw_state
from .constellation import scale_params
from .decode import decode_destination
from .field import build_mds_generator, verify_mds
from .harness import sweep, write_csv
from .schemes import (
    Scheme,
    SchemeConfig,
    amplitude_bound,
    build_generator,
    build_plan,
    corner_points,
    dof_formula,
    encode_frame,
    payload_structure,
    rho_bound,
    scheme_tau,
    wiretap_sets,
)
from .secrecy import (
    cancellation_residuals,
    exact_mi_links,
    link_entropies,
    recover_fictitious,
    snc_mask_bound,
)

# flag defaults, used when neither the command line nor a config file sets a value
SIMULATE_DEFAULTS = {
    "scheme": None,
    "M": None,
    "N": None,
    "epsilon": 0.2,
    "B": 2.0,
    "P": None,
    "trials": 1000,
    "seed": 0,
    "known_T": None,
    "freeze_plan": True,
    "noiseless": False,
    "link_capacity": None,
    "fading": "uniform",
    "workers": 1,
    "parallel_points": False,
    "out": None,
}


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _index_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise SystemExit(f"config {path}: top level must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """Command line beats config file beats built-in default."""
    file_cfg = _load_config(args.config)
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise SystemExit(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key)
        if cli_value is not None:
            merged[key] = cli_value
        elif key in file_cfg:
            merged[key] = file_cfg[key]
        else:
            merged[key] = default
    if isinstance(merged["P"], str):
        merged["P"] = _float_list(merged["P"])
    if isinstance(merged["known_T"], str):
        merged["known_T"] = _index_list(merged["known_T"])
    missing = [k for k in ("scheme", "M", "N", "P", "out") if merged[k] is None]
    if missing:
        raise SystemExit(f"missing required settings: {', '.join(missing)}")
    return merged


def _cmd_simulate(args) -> int:
    opts = _merge(args, SIMULATE_DEFAULTS)
    cfg = SchemeConfig(
        M=int(opts["M"]), N=int(opts["N"]), scheme=Scheme.parse(opts["scheme"]), B=float(opts["B"]),
        epsilon=float(opts["epsilon"]),
        known_T=tuple(opts["known_T"]) if opts["known_T"] is not None else None,
        link_capacity=opts["link_capacity"], freeze_coeffs=bool(opts["freeze_plan"]),
        fading=opts["fading"],
    )
    records = sweep(cfg, opts["P"], int(opts["trials"]), int(opts["seed"]), noiseless=bool(opts["noiseless"]),
                    workers=int(opts["workers"]), parallel_points=bool(opts["parallel_points"]))
    write_csv(records, opts["out"])
    for r in records:
        print(f"P={r.P:.3g} Q={r.Q} dof_est={r.dof_est:.4f} p_e_dest={r.p_e_dest:.4f} "
              f"p_e_eaves={r.p_e_eaves:.4f} leak_dof={r.leak_dof_bound:.4f}")
    return 0


def _cmd_dof_curve(args) -> int:
    if args.alpha_grid < 2:
        raise SystemExit("--alpha-grid needs at least 2 points")
    n = args.alpha_grid
    alpha_max = Fraction(args.alpha_max).limit_denominator(10**6)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "N", "alpha", "d_s"])
        for i in range(n):
            a = alpha_max * i / (n - 1)
            d = dof_formula(args.M, args.N, a)
            w.writerow([args.M, args.N, format(float(a), ".12g"), format(float(d), ".12g")])
    return 0


# verification suites: each returns a list of (name, ok, detail)

def _suite_mds(max_k: int = 12):
    bad = [(j, k) for k in range(1, max_k + 1) for j in range(1, k + 1)
           if not verify_mds(build_mds_generator(j, k))]
    return [("mds j<=k<=%d" % max_k, not bad, f"failures: {bad}" if bad else "all nonsingular")]


def _applicable(M_values=(2, 3, 4)):
    for M in M_values:
        for scheme in Scheme:
            for N in range(1, M + 1):
                try:
                    cfg = SchemeConfig(M, N, scheme)
                except ValueError:
                    continue
                yield cfg


def _suite_cancel(draws: int = 500, seed: int = 0, tol: float = 1e-9):
    rng = np.random.default_rng(seed)
    out = []
    for cfg in _applicable():
        gamma = build_generator(cfg)
        worst = 0.0
        for _ in range(draws):
            ch = draw_state(cfg.M, cfg.B, rng, cfg.fading)
            worst = max(worst, *cancellation_residuals(build_plan(cfg, ch, gamma, rng=rng)))
        out.append((f"cancel {cfg.scheme.value} M={cfg.M} N={cfg.N}", worst < tol, f"max residual {worst:.2e}"))
    return out


def _suite_mi():
    out = []
    cfg = SchemeConfig(2, 1, Scheme.SBCJ_SNC)
    gamma = build_generator(cfg)
    i1 = exact_mi_links(cfg, gamma, 1, (1,))
    i2 = exact_mi_links(cfg, gamma, 1, (2,))
    bound = snc_mask_bound(cfg, 1, gamma.p)
    out.append(("mi oracle T={1}", abs(i1 - 0.61220) < 1e-4, f"I={i1:.6f}"))
    out.append(("mi T={2} is zero", i2 == 0.0, f"I={i2!r}"))
    out.append(("mi below mask bound", i1 <= bound, f"bound={bound:.6f}"))
    for M in (2, 3):
        for N in range(1, M):
            cfg = SchemeConfig(M, N, Scheme.SBCJ_SNC)
            gamma = build_generator(cfg)
            n_f = payload_structure(cfg, gamma)[0].columns("F").size
            for T in wiretap_sets(cfg):
                h_s, _, _ = link_entropies(cfg, gamma, 1, T)
                gap = abs(exact_mi_links(cfg, gamma, 1, T) - (h_s - n_f * math.log2(3)))
                out.append((f"mi identity M={M} N={N} T={T}", gap < 1e-9, f"gap {gap:.1e}"))
    return out


def _suite_roundtrip(frames: int = 200, seed: int = 0):
    out = []
    P = 1e8
    for cfg in _applicable((2, 3)):
        rng = np.random.default_rng(seed)
        gamma = build_generator(cfg)
        p = gamma.p if gamma is not None else None
        spec = scale_params(P, scheme_tau(cfg), cfg.epsilon, amplitude_bound(cfg, rho_bound(cfg, gamma), p))
        errors = 0
        f_err = 0.0
        for _ in range(frames):
            plan = build_plan(cfg, draw_state(cfg.M, cfg.B, rng, cfg.fading), gamma, rng=rng)
            frame = encode_frame(plan, spec, rng, noise_std=0.0)
            errors += decode_destination(frame, plan, spec)[1]
            if cfg.has_mask:
                for T in wiretap_sets(cfg):
                    f_err = max(f_err, float(np.max(np.abs(recover_fictitious(frame, plan, T) - frame.F))))
        name = f"roundtrip {cfg.scheme.value} M={cfg.M} N={cfg.N}"
        out.append((name, errors == 0 and f_err < 1e-9, f"{errors} decode errors, F error {f_err:.1e}"))
    return out


SUITES = {"mds": _suite_mds, "cancel": _suite_cancel, "mi": _suite_mi, "roundtrip": _suite_roundtrip}


def _cmd_verify(args) -> int:
    results = SUITES[args.suite]()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wiretap-diamond", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-point progress")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte-Carlo power sweep, one CSV row per power")
    sim.add_argument("--config", help="JSON file of flag values; command-line flags override it")
    sim.add_argument("--scheme", choices=[s.value for s in Scheme])
    sim.add_argument("--M", type=int)
    sim.add_argument("--N", type=int)
    sim.add_argument("--epsilon", type=float)
    sim.add_argument("--B", type=float)
    sim.add_argument("--P", type=_float_list, help="ascending powers, comma separated")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--known-T", dest="known_T", type=_index_list, help="1-based wiretapped relays, e.g. 1,3")
    sim.add_argument("--freeze-plan", dest="freeze_plan", action=argparse.BooleanOptionalAction, default=None,
                     help="draw the alignment coefficients once per sweep point (default) or per trial")
    sim.add_argument("--noiseless", action="store_const", const=True, default=None)
    sim.add_argument("--link-capacity", dest="link_capacity", type=float,
                     help="bits per link per use; defaults to what the scheme needs")
    sim.add_argument("--fading", choices=FADING_DENSITIES)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--parallel-points", dest="parallel_points", action="store_const", const=True, default=None)
    sim.add_argument("--out")
    sim.set_defaults(func=_cmd_simulate)

    dof = sub.add_parser("dof-curve", help="tabulate the secure d.o.f. against alpha")
    dof.add_argument("--M", type=int, required=True)
    dof.add_argument("--N", type=int, required=True)
    dof.add_argument("--alpha-grid", dest="alpha_grid", type=int, default=101)
    dof.add_argument("--alpha-max", dest="alpha_max", type=float, default=None,
                     help="largest alpha on the grid (default: where the curve saturates, times 1.5)")
    dof.add_argument("--out", required=True)
    dof.set_defaults(func=_cmd_dof_curve)

    ver = sub.add_parser("verify", help="run a property suite; exit code 1 on any failure")
    ver.add_argument("--suite", choices=sorted(SUITES), required=True)
    ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "dof-curve":
        if not 1 <= args.N <= args.M:
            parser.error("need 1 <= N <= M")
        if args.alpha_max is None:
            sat = max(a for a, _ in corner_points(args.M, args.N))
            args.alpha_max = float(sat * Fraction(3, 2))
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
