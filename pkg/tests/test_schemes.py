import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_configs
from wiretap_diamond.channel import ChannelDraw, draw_state
from wiretap_diamond.constellation import scale_params
from wiretap_diamond.schemes import (
    LinkCapacityError,
    PowerConstraintError,
    Scheme,
    SchemeConfig,
    amplitude_bound,
    build_generator,
    build_plan,
    corner_points,
    cyclic_index,
    dof_formula,
    draw_coefficients,
    encode_frame,
    generator_shape,
    link_capacity_bits,
    payload_alphabet_size,
    payload_structure,
    plan_sbcj,
    plan_sbcj_snc,
    plan_scoj,
    plan_scoj_snc,
    rate_bits,
    required_link_dof,
    rho_bound,
    scheme_spec,
    scheme_tau,
)


def _draw(M, seed=0):
    return draw_state(M, 2.0, np.random.default_rng(seed))


# configuration

def test_scheme_parse():
    assert Scheme.parse("SBCJ_SNC") is Scheme.SBCJ_SNC
    assert Scheme.parse("scoj-snc") is Scheme.SCOJ_SNC
    with pytest.raises(ValueError):
        Scheme.parse("bcj")


@pytest.mark.parametrize("kwargs", [
    dict(M=1, N=1), dict(M=3, N=0), dict(M=3, N=4), dict(M=3, N=1, scheme="scoj"),
    dict(M=3, N=2, B=1.0), dict(M=3, N=2, epsilon=0.0), dict(M=3, N=2, known_T=(1, 2)),
    dict(M=3, N=2, known_T=(4,)),
])
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        SchemeConfig(**kwargs)


def test_config_w_and_roles():
    cfg = SchemeConfig(4, 2, "sbcj", known_T=(3, 1))
    assert cfg.W == 2 and cfg.known_T == (1, 3)
    assert cfg.wiretapped == (1, 3)
    assert cfg.role_order.tolist() == [1, 3, 0, 2]
    # the masking schemes protect against every tapped set, so planning ignores known_T
    snc = SchemeConfig(4, 2, "sbcj-snc", known_T=(1, 3))
    assert snc.wiretapped == (3, 4)


@pytest.mark.parametrize("j, i, out", [(0, 3, 3), (4, 3, 1), (2, 3, 2), (1, 1, 1), (0, 1, 1), (2, 1, 1)])
def test_cyclic_index(j, i, out):
    assert cyclic_index(j, i) == out


def test_cyclic_index_range():
    with pytest.raises(ValueError):
        cyclic_index(5, 3)
    with pytest.raises(ValueError):
        cyclic_index(-1, 3)


# S-BCJ

@pytest.mark.parametrize("M, N", [(2, 2), (3, 3), (3, 2), (4, 1), (4, 3)])
def test_sbcj_alignment(M, N):
    rng = np.random.default_rng(M * 10 + N)
    for _ in range(200):
        ch = draw_state(M, 2.0, rng)
        plan = plan_sbcj(SchemeConfig(M, N), ch, rng)
        c = plan.y1_coeffs
        for j in range(1, N + 1):
            cols = [plan.layout.index("U", k, j) for k in range(1, M + 1)]
            assert np.allclose(c[cols], plan.nu[j], rtol=1e-12, atol=0)


def test_sbcj_message_slots():
    for M in (2, 3, 4):
        plan = plan_sbcj(SchemeConfig(M, M), _draw(M), np.random.default_rng(0))
        assert plan.layout.columns("V").size == M * (M - 1)


def test_sbcj_idle_link_carries_nothing():
    cfg = SchemeConfig(3, 2)
    plan = plan_sbcj(cfg, _draw(3), np.random.default_rng(0))
    assert plan.payloads[2].shape[0] == 0
    # relay 3 still jams
    assert np.any(plan.tx_matrix[2] != 0)
    moved = plan_sbcj(SchemeConfig(3, 2, known_T=(1,)), _draw(3), np.random.default_rng(0))
    assert moved.payloads[0].shape[0] == 0 and moved.payloads[2].shape[0] == 2


def test_sbcj_destination_coefficients():
    ch = _draw(3, 5)
    plan = plan_sbcj(SchemeConfig(3, 3), ch, np.random.default_rng(1))
    c = plan.y1_coeffs
    for (k, j), mu in plan.mu.items():
        assert c[plan.layout.index("V", k, j)] == pytest.approx(ch.h[k - 1] * mu, rel=1e-12)


# S-CoJ

def test_scoj_nulls_jamming_and_keeps_messages():
    rng = np.random.default_rng(3)
    for _ in range(500):
        ch = draw_state(4, 2.0, rng)
        plan = plan_scoj(SchemeConfig(4, 3, "scoj"), ch)
        c = plan.y1_coeffs
        for k in range(1, 4):
            assert c[plan.layout.index("V", k)] == pytest.approx(ch.h[k - 1], rel=1e-14)
            assert abs(c[plan.layout.index("U", k)]) < 1e-12 * np.abs(ch.h).max()
        assert np.all(plan.tx_matrix[3] == 0)


def test_scoj_payload_pairs():
    N = 3
    plan = plan_scoj(SchemeConfig(3, N, "scoj"), _draw(3))
    lay = plan.layout
    for k in range(1, N + 1):
        first, second = plan.payloads[k - 1]
        assert np.flatnonzero(first).tolist() == sorted([lay.index("V", k), lay.index("U", k)])
        assert np.flatnonzero(second).tolist() == [lay.index("U", cyclic_index(k + 1, N))]


def test_scoj_eavesdropper_coefficient():
    rng = np.random.default_rng(9)
    N = 3
    for _ in range(10000 // 20):
        ch = draw_state(4, 2.0, rng)
        plan = plan_scoj(SchemeConfig(4, N, "scoj"), ch)
        h, g = ch.h, ch.g
        for k in range(1, N + 1):
            km = cyclic_index(k - 1, N)
            want = g[k - 1] - h[k - 1] * g[km - 1] / h[km - 1]
            got = plan.y2_coeffs[plan.layout.index("U", k)]
            assert got == pytest.approx(want, rel=1e-12, abs=1e-14)
            assert want != 0


# S-BCJ-SNC

def test_sbcj_snc_two_relays_hand_solution():
    cfg = SchemeConfig(2, 1, "sbcj-snc")
    gamma = build_generator(cfg)
    assert gamma.p == 2 and gamma.entries.tolist() == [[1, 1]]
    ch = ChannelDraw(np.array([0.8, -1.7]), np.array([1.1, 0.6]))
    plan = plan_sbcj_snc(cfg, ch, gamma, np.random.default_rng(0))
    assert plan.sigma[((1, 1), (2, 1))] == pytest.approx(1.0)
    assert plan.rho[(2, 1)] == pytest.approx(-(0.8 / -1.7) * plan.mu[(1, 1)], rel=1e-14)
    assert abs(plan.y1_coeffs[plan.layout.index("F", 1)]) < 1e-14


@pytest.mark.parametrize("M, N", [(3, 1), (3, 2), (4, 1), (4, 2), (4, 3)])
def test_sbcj_snc_sigma_and_rho_formula(M, N):
    cfg = SchemeConfig(M, N, "sbcj-snc")
    gamma = build_generator(cfg)
    assert gamma.shape == (cfg.W * (M - 1), M * (M - 1))
    assert gamma.p == min(p for p in range(M * (M - 1), 100) if all(p % d for d in range(2, p)))
    G = gamma.entries.astype(float)
    col = lambda a, b: (a - 1) * (M - 1) + (b - 1)
    rng = np.random.default_rng(M + N)
    for _ in range(50):
        ch = draw_state(M, 2.0, rng)
        plan = plan_sbcj_snc(cfg, ch, gamma, rng)
        # each target column equals its sigma-weighted basis expansion
        for a in range(1, N + 1):
            for b in range(1, M):
                expansion = sum(plan.sigma[((a, b), (k, j))] * G[:, col(k, j)]
                                for k in range(N + 1, M + 1) for j in range(1, M))
                assert np.allclose(expansion, G[:, col(a, b)], atol=1e-9)
        # rho_{k,j} = -sum_{a,b} (h_a/h_k) mu_{a,b} sigma_{a,b|k,j}
        h = ch.h
        for k in range(N + 1, M + 1):
            for j in range(1, M):
                want = -sum(h[a - 1] / h[k - 1] * plan.mu[(a, b)] * plan.sigma[((a, b), (k, j))]
                            for a in range(1, N + 1) for b in range(1, M))
                assert plan.rho[(k, j)] == pytest.approx(want, rel=1e-9, abs=1e-12)
        ref = np.abs(plan.y1_coeffs[plan.layout.columns("V")]).max()
        assert np.abs(plan.y1_coeffs[plan.layout.columns("F")]).max() < 1e-9 * ref


def test_sbcj_snc_without_taps_is_sbcj():
    ch = _draw(3, 2)
    coeffs = draw_coefficients(SchemeConfig(3, 3), np.random.default_rng(4))
    a = plan_sbcj(SchemeConfig(3, 3), ch, coeffs=coeffs)
    b = plan_sbcj_snc(SchemeConfig(3, 3, "sbcj-snc"), ch, coeffs=coeffs)
    assert b.layout.columns("F").size == 0 and b.gamma is None
    assert np.array_equal(a.tx_matrix, b.tx_matrix)
    assert all(np.array_equal(x, y) for x, y in zip(a.payloads, b.payloads))


# S-CoJ-SNC

def test_scoj_snc_payloads():
    M, N = 4, 2
    cfg = SchemeConfig(M, N, "scoj-snc")
    gamma = build_generator(cfg)
    assert gamma.shape == (4, 8) and gamma.p == 11
    layout, payloads = payload_structure(cfg, gamma)
    G = gamma.entries
    f = layout.columns("F")
    for k in range(1, N + 1):
        r1, r2 = payloads[k - 1]
        assert np.array_equal(r1[f], G[:, 2 * k - 2]) and np.array_equal(r2[f], G[:, 2 * k - 1])
        assert r1[layout.index("V", k)] == 1 and r1[layout.index("U", k)] == 1
        assert r2[layout.index("U", cyclic_index(k + 1, N))] == 1
        assert np.count_nonzero(np.delete(r1, f)) == 2 and np.count_nonzero(np.delete(r2, f)) == 1
    for i in range(N + 1, M + 1):
        r1, r2 = payloads[i - 1]
        assert np.array_equal(r1[f], G[:, 2 * i - 2]) and np.array_equal(r2[f], G[:, 2 * i - 1])
        assert np.count_nonzero(np.delete(payloads[i - 1], f, axis=1)) == 0


@pytest.mark.parametrize("M, N", [(3, 2), (4, 2), (4, 3)])
def test_scoj_snc_rho_formula(M, N):
    cfg = SchemeConfig(M, N, "scoj-snc")
    rng = np.random.default_rng(M * N)
    for _ in range(50):
        ch = draw_state(M, 2.0, rng)
        plan = plan_scoj_snc(cfg, ch)
        h = ch.h
        nxt = lambda k: cyclic_index(k + 1, N)
        for i in range(2 * N + 1, 2 * M + 1):
            j = (i + 1) // 2  # relay sending masked column i
            want = (-sum(h[k - 1] / h[j - 1] * plan.sigma[(2 * k - 1, i)] for k in range(1, N + 1))
                    + sum(h[nxt(k) - 1] / h[j - 1] * plan.sigma[(2 * k, i)] for k in range(1, N + 1)))
            assert plan.rho[i] == pytest.approx(want, rel=1e-9, abs=1e-12)
        c = plan.y1_coeffs
        ref = np.abs(c[plan.layout.columns("V")]).max()
        assert np.abs(c[plan.beamformed]).max() < 1e-9 * ref
        for k in range(1, N + 1):
            assert c[plan.layout.index("V", k)] == pytest.approx(h[k - 1], rel=1e-12)


def test_scoj_snc_rho_sign_matters():
    # flipping the second rho term leaves a mask residue at the destination
    cfg = SchemeConfig(3, 2, "scoj-snc")
    ch = _draw(3, 11)
    plan = plan_scoj_snc(cfg, ch)
    h = ch.h
    flipped = {}
    for i in (5, 6):
        j = 3
        flipped[i] = (-sum(h[k - 1] / h[j - 1] * plan.sigma[(2 * k - 1, i)] for k in (1, 2))
                      - sum(h[cyclic_index(k + 1, 2) - 1] / h[j - 1] * plan.sigma[(2 * k, i)] for k in (1, 2)))
    A = plan.tx_matrix.copy()
    f = plan.layout.columns("F")
    S3 = plan.payloads[2]
    A[2] = np.array([flipped[5], flipped[6]]) @ S3
    assert np.abs((h @ A)[f]).max() > 1e-3


def test_scoj_snc_without_taps_is_scoj():
    ch = _draw(3, 1)
    a = plan_scoj(SchemeConfig(3, 3, "scoj"), ch)
    b = plan_scoj_snc(SchemeConfig(3, 3, "scoj-snc"), ch)
    assert b.rho == {} and np.array_equal(a.tx_matrix, b.tx_matrix)


# constraints and frames

def test_gamma_tilde_formulas():
    assert amplitude_bound(SchemeConfig(2, 2, "scoj", B=2.0)) == 6.0
    cfg = SchemeConfig(3, 1, "sbcj-snc", B=2.0)
    p = build_generator(cfg).p
    assert p == 7
    s = 2 * 2 * 6
    assert amplitude_bound(cfg, 0.5, p) == max(2 * 2 * (s + 1), 2 * 0.5 * s) + 4
    assert amplitude_bound(cfg, 100.0, p) == max(2 * 2 * (s + 1), 2 * 100.0 * s) + 4
    c2 = SchemeConfig(3, 2, "scoj-snc", B=2.0)
    assert amplitude_bound(c2, 1.0, 7) == max(2 + 12 + 4 * 13, 4 * 1.0 * 6)


def test_rho_bound_covers_realised():
    for cfg in all_configs((2, 3, 4), (Scheme.SBCJ_SNC, Scheme.SCOJ_SNC)):
        if not cfg.has_mask:
            assert rho_bound(cfg, None) == 0.0
            continue
        gamma = build_generator(cfg)
        rng = np.random.default_rng(0)
        coeffs = draw_coefficients(cfg, rng)
        bound = rho_bound(cfg, gamma, coeffs)
        for _ in range(300):
            plan = build_plan(cfg, draw_state(cfg.M, cfg.B, rng), gamma, coeffs=coeffs)
            assert max(abs(r) for r in plan.rho.values()) <= bound * (1 + 1e-12)


def test_link_capacity_formulas():
    assert link_capacity_bits(SchemeConfig(2, 2, "scoj"), 5) == pytest.approx(2 * math.log2(21))
    assert link_capacity_bits(SchemeConfig(3, 3), 4) == pytest.approx(2 * math.log2(9))
    cfg = SchemeConfig(3, 2, "sbcj-snc")
    assert link_capacity_bits(cfg, 2, 7) == pytest.approx(2 * math.log2(2 * (1 * 2 * 6 + 1) * 2 + 1))
    cfg = SchemeConfig(4, 2, "scoj-snc")
    assert link_capacity_bits(cfg, 3, 11) == pytest.approx(2 * math.log2(4 * (2 * 10 + 1) * 3 + 1))


def _enumerated_payload_support(S, Q):
    # distinct values each payload entry takes, brute force over the used symbols
    used = np.flatnonzero(np.any(S != 0, axis=0))
    axes = [np.arange(-Q, Q + 1)] * used.size
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, used.size)
    return [np.unique(pts @ row[used]).size for row in S]


@pytest.mark.parametrize("cfg", [SchemeConfig(2, 1, "sbcj-snc"), SchemeConfig(3, 2, "scoj-snc"),
                                 SchemeConfig(2, 2, "scoj"), SchemeConfig(3, 2, "sbcj-snc")])
def test_payload_alphabet_size_bounds_enumeration(cfg):
    _, payloads = payload_structure(cfg)
    for S in payloads:
        if S.shape[0] == 0:
            assert payload_alphabet_size(S, 1) == 1
            continue
        per_entry = _enumerated_payload_support(S, 1)
        assert math.prod(per_entry) <= payload_alphabet_size(S, 1)
        assert all(n <= 2 * np.abs(r).sum() + 1 for n, r in zip(per_entry, S))


@pytest.mark.parametrize("cfg", all_configs((2, 3, 4)), ids=lambda c: f"{c.scheme.value}-{c.M}{c.N}")
def test_frames_respect_power_and_links(cfg):
    rng = np.random.default_rng(cfg.M * 7 + cfg.N)
    gamma = build_generator(cfg)
    coeffs = draw_coefficients(cfg, rng)
    p = gamma.p if gamma is not None else None
    gt = amplitude_bound(cfg, rho_bound(cfg, gamma, coeffs), p)
    spec = scale_params(1e8, scheme_tau(cfg), cfg.epsilon, gt)
    cap = link_capacity_bits(cfg, spec.Q, p)
    for _ in range(100):
        plan = build_plan(cfg, draw_state(cfg.M, cfg.B, rng), gamma, coeffs=coeffs)
        fr = encode_frame(plan, spec, rng)
        assert np.all(np.abs(fr.X) <= gt * spec.delta * spec.Q * (1 + 1e-12))
        assert gt * spec.delta * spec.Q <= math.sqrt(spec.P) * (1 + 1e-12)
        for S in plan.payloads:
            assert math.log2(payload_alphabet_size(S, spec.Q)) <= cap + 1e-9
        if gamma is not None:
            assert np.allclose(fr.L, fr.F @ gamma.entries)
        # unit-variance noise: an 8-sigma excursion would be a bug, not bad luck
        assert fr.Y1 == pytest.approx(float(plan.channel.h @ fr.X), abs=8)


def test_masked_payload_alphabet_range():
    cfg = SchemeConfig(3, 1, "sbcj-snc")
    gamma = build_generator(cfg)
    rng = np.random.default_rng(2)
    plan = build_plan(cfg, _draw(3), gamma, rng=rng)
    spec = scheme_spec(plan, 1e8)
    half = (cfg.W * (cfg.M - 1) * (gamma.p - 1) + 1) * spec.Q
    for _ in range(300):
        fr = encode_frame(plan, spec, rng)
        for S in fr.S:
            idx = S / spec.delta
            assert np.allclose(idx, np.round(idx), atol=1e-6)
            assert np.all(np.abs(np.round(idx)) <= half)


def test_zero_mask_reproduces_plain_payloads():
    for scheme, plain in ((Scheme.SBCJ_SNC, Scheme.SBCJ), (Scheme.SCOJ_SNC, Scheme.SCOJ)):
        cfg = SchemeConfig(3, 2, scheme)
        lay, masked = payload_structure(cfg)
        lay0, base = payload_structure(dataclasses.replace(cfg, scheme=plain))
        keep = np.setdiff1d(np.arange(lay.n), lay.columns("F"))
        assert lay0.n == keep.size
        for k in range(cfg.N):
            assert np.array_equal(masked[k][:, keep], base[k])


def test_encode_rejects_small_link():
    cfg = SchemeConfig(2, 2, "scoj", link_capacity=3.0)
    plan = plan_scoj(cfg, _draw(2))
    spec = scheme_spec(plan, 1e8)
    with pytest.raises(LinkCapacityError):
        encode_frame(plan, spec, np.random.default_rng(0))
    ok = dataclasses.replace(cfg, link_capacity=2 * math.log2(4 * spec.Q + 1))
    encode_frame(plan_scoj(ok, _draw(2)), spec, np.random.default_rng(0))


def test_encode_rejects_overpowered_spec():
    cfg = SchemeConfig(3, 3)
    plan = plan_sbcj(cfg, _draw(3), np.random.default_rng(0))
    spec = scale_params(1e8, scheme_tau(cfg), cfg.epsilon, 0.05)
    with pytest.raises(PowerConstraintError):
        for s in range(50):
            encode_frame(plan, spec, np.random.default_rng(s))


def test_destination_entities_distinct():
    for cfg in (SchemeConfig(2, 2), SchemeConfig(3, 2), SchemeConfig(3, 3, "scoj")):
        rng = np.random.default_rng(1)
        coeffs = draw_coefficients(cfg, rng)
        for _ in range(10000):
            plan = build_plan(cfg, draw_state(cfg.M, cfg.B, rng), coeffs=coeffs)
            c = plan.y1_coeffs
            lam = np.array([c[list(cols)][0] for _, cols in plan.dest_groups])
            gaps = np.abs(lam[:, None] - lam[None, :])[np.triu_indices(lam.size, 1)]
            assert gaps.min() > 1e-12


# d.o.f. formulas

@pytest.mark.parametrize("M, N, alpha, d", [
    (3, 2, Fraction(1, 3), Fraction(2, 3)), (3, 2, 1, 1), (3, 3, Fraction(2, 9), Fraction(2, 3)),
    (3, 3, Fraction(2, 3), 1), (4, 2, 0, 0), (3, 1, Fraction(1, 2), Fraction(1, 2)),
    (3, 1, 5, Fraction(2, 3)),
])
def test_dof_formula_exact(M, N, alpha, d):
    out = dof_formula(M, N, alpha)
    assert isinstance(out, Fraction) and out == d


def test_corner_points_on_curve():
    for M in range(2, 6):
        for N in range(1, M + 1):
            for a, d in corner_points(M, N):
                assert dof_formula(M, N, a) == d


@settings(max_examples=200)
@given(st.integers(2, 6).flatmap(lambda M: st.tuples(st.just(M), st.integers(1, M))),
       st.fractions(0, 4), st.fractions(0, 4), st.fractions(0, 1))
def test_dof_formula_concave_monotone(MN, a, b, t):
    M, N = MN
    lo, hi = min(a, b), max(a, b)
    f = lambda x: dof_formula(M, N, x)
    assert 0 <= f(lo) <= f(hi) <= 1
    assert f(t * a + (1 - t) * b) >= t * f(a) + (1 - t) * f(b)
    cap = Fraction(M - 1, M) if N == 1 else 1
    assert f(Fraction(10)) == cap


def test_dof_formula_float_grid_shape():
    for M, N in ((3, 1), (3, 2), (3, 3)):
        grid = np.linspace(0, 2, 100)
        d = np.array([dof_formula(M, N, float(a)) for a in grid])
        assert np.all(np.diff(d) >= -1e-15)
        assert np.all(np.diff(d, 2) <= 1e-12)
        assert d[-1] == pytest.approx((M - 1) / M if N == 1 else 1.0)


def test_required_link_dof():
    assert required_link_dof([], 1e6) == 0.0
    assert required_link_dof([1], 1e6) == 0.0
    with pytest.raises(ValueError):
        required_link_dof([4], 1.0)
    M = 3
    P = 1e200
    spec = scale_params(P, M * M, 0.01, 1.0)
    alpha = required_link_dof([(2 * spec.Q + 1) ** (M - 1)], P)
    assert alpha == pytest.approx((M - 1) / M**2, abs=0.01)
    # sizes as exact integers so math.log2 accepts them beyond float range
    assert alpha == pytest.approx((M - 1) * math.log2(2 * spec.Q + 1) / (0.5 * math.log2(P)))


def test_required_link_dof_scoj_snc():
    cfg = SchemeConfig(3, 2, "scoj-snc", epsilon=0.1)
    P = 1e10
    gamma = build_generator(cfg)
    spec = scale_params(P, scheme_tau(cfg), cfg.epsilon, amplitude_bound(cfg, rho_bound(cfg, gamma), gamma.p))
    _, payloads = payload_structure(cfg, gamma)
    alpha = required_link_dof([payload_alphabet_size(S, spec.Q) for S in payloads], P)
    assert math.isfinite(alpha) and alpha > 0
    assert alpha <= link_capacity_bits(cfg, spec.Q, gamma.p) / (0.5 * math.log2(P)) + 1e-12


def test_rate_bits():
    assert rate_bits(SchemeConfig(3, 2), 4) == pytest.approx(4 * math.log2(9))
    assert rate_bits(SchemeConfig(3, 2, "scoj"), 4) == pytest.approx(2 * math.log2(9))


def test_generator_shapes():
    assert generator_shape(SchemeConfig(4, 1, "sbcj-snc")) == (9, 12)
    assert generator_shape(SchemeConfig(4, 2, "scoj-snc")) == (4, 8)
    assert build_generator(SchemeConfig(3, 3, "sbcj-snc")) is None
