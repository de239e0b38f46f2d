"""Wiring, precoding and d.o.f. bookkeeping for the four jamming schemes.

Every channel use is linear in one symbol vector ``z = delta * q`` holding
message symbols ``V``, jamming symbols ``U`` and fictitious symbols ``F``
(each ``q`` uniform on ``{-Q..Q}``).  A plan stores

* ``payloads[k]``: integer matrix mapping ``z`` to the link payload ``S_k``;
* ``weights[k]``: how relay ``k`` combines the entries of ``S_k``;
* ``local``: relay-generated jamming (nonzero only on that relay's own ``U``),

so relay ``k`` transmits ``X_k = weights[k] @ S_k + local[k] @ z`` and every
received coefficient is a row of ``tx_matrix``.

Relay labels exposed to callers (``known_T``, eavesdropped sets ``T``) are
1-based, as are the keys of the coefficient maps.  Internally relays are
arranged by *role*: roles ``0..N-1`` carry secure links, roles ``N..M-1``
the wiretapped (or assumed-wiretapped) ones.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .channel import ChannelDraw, mac_output
from .constellation import ConstellationSpec, sample_indices, scale_params
from .field import GeneratorMatrix, build_mds_generator

__all__ = [
    "CoefficientDraw",
    "Frame",
    "LinkCapacityError",
    "PowerConstraintError",
    "PrecodingPlan",
    "Scheme",
    "SchemeConfig",
    "SymbolLayout",
    "amplitude_bound",
    "build_generator",
    "build_plan",
    "corner_points",
    "cyclic_index",
    "dof_formula",
    "draw_coefficients",
    "encode_frame",
    "link_capacity_bits",
    "payload_alphabet_size",
    "payload_structure",
    "plan_sbcj",
    "plan_sbcj_snc",
    "plan_scoj",
    "plan_scoj_snc",
    "rate_bits",
    "required_link_dof",
    "rho_bound",
    "scheme_spec",
    "scheme_tau",
    "wiretap_sets",
]

SIGMA_RESIDUAL_TOL = 1e-9


class Scheme(str, enum.Enum):
    SBCJ = "sbcj"
    SCOJ = "scoj"
    SBCJ_SNC = "sbcj-snc"
    SCOJ_SNC = "scoj-snc"

    @property
    def is_snc(self) -> bool:
        return self in (Scheme.SBCJ_SNC, Scheme.SCOJ_SNC)

    @property
    def is_coj(self) -> bool:
        return self in (Scheme.SCOJ, Scheme.SCOJ_SNC)

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for s in cls:
            if s.value == key:
                return s
        raise ValueError(f"unknown scheme {value!r}; expected one of {[s.value for s in cls]}")


class PowerConstraintError(RuntimeError):
    """A relay input exceeded ``sqrt(P)``: the constellation is mis-scaled."""


class LinkCapacityError(RuntimeError):
    """A link payload alphabet does not fit the link capacity."""


def cyclic_index(j: int, i: int) -> int:
    """``[j]_i``: ``j`` for ``j in [1:i]``, ``i`` for ``j = 0`` and 1 for ``j = i+1``."""
    if i < 1 or not 0 <= j <= i + 1:
        raise ValueError(f"cyclic_index needs i >= 1 and 0 <= j <= i+1, got j={j}, i={i}")
    if j == 0:
        return i
    if j == i + 1:
        return 1
    return j


@dataclass(frozen=True)
class SchemeConfig:
    """Topology and scaling knobs for one scheme.

    ``known_T`` lists the 1-based wiretapped relays for the known-location
    schemes (default: the last ``W``).  The SNC schemes always mask as if
    the last ``W`` links were tapped and ignore it for planning.
    ``link_capacity`` is in bits per use; ``None`` means the scheme's own
    requirement at the chosen ``Q``.
    """

    M: int
    N: int
    scheme: Scheme = Scheme.SBCJ
    B: float = 2.0
    epsilon: float = 0.2
    known_T: tuple[int, ...] | None = None
    link_capacity: float | None = None
    freeze_coeffs: bool = True
    fading: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.M < 2:
            raise ValueError(f"need M >= 2 relays, got {self.M}")
        if not 1 <= self.N <= self.M:
            raise ValueError(f"need 1 <= N <= M, got N={self.N}, M={self.M}")
        if self.scheme.is_coj and self.N < 2:
            raise ValueError(f"{self.scheme.value} needs N >= 2 secure links")
        if self.B <= 1:
            raise ValueError(f"gain bound B must exceed 1, got {self.B}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.known_T is not None:
            T = tuple(sorted(int(t) for t in self.known_T))
            if len(T) != self.W or len(set(T)) != len(T) or any(not 1 <= t <= self.M for t in T):
                raise ValueError(f"known_T must hold {self.W} distinct relays in [1:{self.M}], got {self.known_T}")
            object.__setattr__(self, "known_T", T)

    @property
    def W(self) -> int:
        return self.M - self.N

    @property
    def wiretapped(self) -> tuple[int, ...]:
        """1-based relays treated as wiretapped when planning."""
        if self.known_T is not None and not self.scheme.is_snc:
            return self.known_T
        return tuple(range(self.N + 1, self.M + 1))

    @property
    def role_order(self) -> np.ndarray:
        """``role_order[r]`` is the 0-based physical relay playing role ``r``."""
        tapped = set(self.wiretapped)
        secure = [k - 1 for k in range(1, self.M + 1) if k not in tapped]
        return np.array(secure + [k - 1 for k in self.wiretapped], dtype=int)

    @property
    def has_mask(self) -> bool:
        return self.scheme.is_snc and self.W > 0


def wiretap_sets(cfg: SchemeConfig) -> list[tuple[int, ...]]:
    """Eavesdropped link sets the secrecy analysis must cover."""
    if cfg.scheme.is_snc:
        return list(itertools.combinations(range(1, cfg.M + 1), cfg.W))
    return [cfg.wiretapped]


def scheme_tau(cfg: SchemeConfig) -> int:
    """Alignment dimension the constellation is tuned for: ``MN`` or ``N``."""
    return cfg.N if cfg.scheme.is_coj else cfg.M * cfg.N


def generator_shape(cfg: SchemeConfig) -> tuple[int, int]:
    if cfg.scheme.is_coj:
        return 2 * cfg.W, 2 * cfg.M
    return cfg.W * (cfg.M - 1), cfg.M * (cfg.M - 1)


def build_generator(cfg: SchemeConfig) -> GeneratorMatrix | None:
    """Masking matrix for an SNC scheme, ``None`` when there is nothing to mask."""
    if not cfg.has_mask:
        return None
    return build_mds_generator(*generator_shape(cfg))


@dataclass(frozen=True, eq=False)
class SymbolLayout:
    """Column layout of the symbol vector ``z``."""

    labels: tuple[tuple[str, tuple[int, ...]], ...]

    @cached_property
    def kinds(self) -> np.ndarray:
        return np.array([kind for kind, _ in self.labels])

    def columns(self, kind: str) -> np.ndarray:
        return np.flatnonzero(self.kinds == kind)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, kind: str, *idx: int) -> int:
        return self.labels.index((kind, tuple(idx)))


def _layout(cfg: SchemeConfig) -> SymbolLayout:
    M, N, W = cfg.M, cfg.N, cfg.W
    labels = []
    if cfg.scheme.is_coj:
        labels += [("V", (k,)) for k in range(1, N + 1)]
        labels += [("U", (k,)) for k in range(1, N + 1)]
        n_f = 2 * W if cfg.has_mask else 0
    else:
        labels += [("V", (k, j)) for k in range(1, N + 1) for j in range(1, M)]
        labels += [("U", (k, j)) for k in range(1, M + 1) for j in range(1, N + 1)]
        n_f = W * (M - 1) if cfg.has_mask else 0
    labels += [("F", (m,)) for m in range(1, n_f + 1)]
    return SymbolLayout(tuple(labels))


def payload_structure(cfg: SchemeConfig, gamma: GeneratorMatrix | None = None):
    """Channel-independent link wiring.

    Returns
    -------
    layout : SymbolLayout
    payloads : tuple of ndarray of int
        ``payloads[k]`` (physical 0-based relay ``k``) has one row per entry
        of ``S_k``; ``S_k = payloads[k] @ z``.
    """
    if cfg.has_mask and gamma is None:
        gamma = build_generator(cfg)
    return _payload_structure(cfg, gamma if cfg.has_mask else None)


@lru_cache(maxsize=64)
def _payload_structure(cfg: SchemeConfig, gamma: GeneratorMatrix | None):
    if cfg.has_mask:
        if gamma.shape != generator_shape(cfg):
            raise ValueError(f"generator shape {gamma.shape} != required {generator_shape(cfg)}")
    layout = _layout(cfg)
    M, N, n = cfg.M, cfg.N, layout.n
    f_cols = layout.columns("F")
    role_rows: list[np.ndarray] = []

    def masked(rows, mask_cols):
        if cfg.has_mask:
            for r, c in zip(rows, mask_cols):
                r[f_cols] += gamma.entries[:, c]
        return rows

    if cfg.scheme.is_coj:
        for k in range(M):
            if k < N:
                rows = np.zeros((2, n), dtype=np.int64)
                rows[0, layout.index("V", k + 1)] = 1
                rows[0, layout.index("U", k + 1)] = 1
                rows[1, layout.index("U", (k + 1) % N + 1)] = 1
            else:
                rows = np.zeros((2 if cfg.has_mask else 0, n), dtype=np.int64)
            role_rows.append(masked(rows, (2 * k, 2 * k + 1)))
    else:
        for k in range(M):
            if k < N:
                rows = np.zeros((M - 1, n), dtype=np.int64)
                for j in range(M - 1):
                    rows[j, layout.index("V", k + 1, j + 1)] = 1
            else:
                rows = np.zeros((M - 1 if cfg.has_mask else 0, n), dtype=np.int64)
            role_rows.append(masked(rows, range(k * (M - 1), (k + 1) * (M - 1))))

    payloads = [None] * M
    for role, phys in enumerate(cfg.role_order):
        role_rows[role].setflags(write=False)
        payloads[phys] = role_rows[role]
    return layout, tuple(payloads)


def payload_alphabet_size(payload: np.ndarray, Q: int) -> int:
    """Size of the per-entry range product of a link payload (1 for an empty link)."""
    widths = np.abs(payload).sum(axis=1)
    return math.prod(int(2 * Q * w + 1) for w in widths)


def link_capacity_bits(cfg: SchemeConfig, Q: int, p: int | None = None) -> float:
    """Link capacity (bits per use) the scheme needs at half-width ``Q``."""
    M, W = cfg.M, cfg.W
    if cfg.has_mask and p is None:
        p = build_generator(cfg).p
    masked = cfg.has_mask
    if cfg.scheme.is_coj:
        spread = W * (p - 1) if masked else 0
        return 2 * math.log2(4 * (spread + 1) * Q + 1)
    spread = W * (M - 1) * (p - 1) if masked else 0
    return (M - 1) * math.log2(2 * (spread + 1) * Q + 1)


@dataclass(frozen=True)
class CoefficientDraw:
    """Random precoding coefficients ``mu`` (N x (M-1)) and ``nu`` (N)."""

    mu: np.ndarray
    nu: np.ndarray


def _uniform_nonzero(rng, B, size, floor=1e-12):
    x = rng.uniform(-B, B, size=size)
    while np.any(np.abs(x) < floor):
        bad = np.abs(x) < floor
        x[bad] = rng.uniform(-B, B, size=int(bad.sum()))
    return x


def draw_coefficients(cfg: SchemeConfig, rng: np.random.Generator) -> CoefficientDraw:
    if cfg.scheme.is_coj:
        return CoefficientDraw(np.zeros((cfg.N, 0)), np.zeros(0))
    mu = _uniform_nonzero(rng, cfg.B, (cfg.N, cfg.M - 1))
    nu = _uniform_nonzero(rng, cfg.B, cfg.N)
    return CoefficientDraw(mu, nu)


def _solve_expansion(gamma: GeneratorMatrix, basis_cols, target_cols) -> np.ndarray:
    """Express each target column of the masking matrix in the basis columns.

    Returns ``X`` with ``gamma[:, basis] @ X == gamma[:, targets]``; entry
    ``X[b, t]`` is the expansion coefficient of target ``t`` on basis ``b``.
    """
    G = gamma.entries.astype(float)
    basis = G[:, basis_cols]
    target = G[:, target_cols]
    try:
        X = np.linalg.solve(basis, target)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("masking basis submatrix is singular; generator is not MDS") from exc
    scale = max(np.abs(target).max(), 1.0)
    if np.abs(basis @ X - target).max() > SIGMA_RESIDUAL_TOL * scale:
        raise RuntimeError("column-expansion residual exceeds tolerance")
    return X


@lru_cache(maxsize=64)
def _masking_expansion(cfg: SchemeConfig, gamma: GeneratorMatrix) -> np.ndarray:
    """Expansion of the secure relays' mask columns in the tapped relays' columns."""
    M, N = cfg.M, cfg.N
    if cfg.scheme.is_coj:
        targets, basis = np.arange(2 * N), np.arange(2 * N, 2 * M)
    else:
        targets, basis = np.arange(N * (M - 1)), np.arange(N * (M - 1), M * (M - 1))
    X = _solve_expansion(gamma, basis, targets)
    X.setflags(write=False)
    return X


def rho_bound(cfg: SchemeConfig, gamma: GeneratorMatrix | None,
              coeffs: CoefficientDraw | None = None) -> float:
    """Bound on ``|rho|`` valid for every admissible channel draw.

    Uses ``|h_a / h_k| <= B**2``; with frozen coefficients the actual
    ``|mu|`` enter, otherwise their bound ``B``.
    """
    if not cfg.has_mask:
        return 0.0
    if gamma is None:
        gamma = build_generator(cfg)
    X = np.abs(_masking_expansion(cfg, gamma))
    if cfg.scheme.is_coj:
        return float(cfg.B**2 * X.sum(axis=1).max())
    if coeffs is not None and cfg.freeze_coeffs:
        mu_abs = np.abs(coeffs.mu).ravel()
    else:
        mu_abs = np.full(X.shape[1], cfg.B)
    return float(cfg.B**2 * (X @ mu_abs).max())


@dataclass(frozen=True, eq=False)
class PrecodingPlan:
    """Per-channel-draw precoder of one scheme.

    The coefficient maps follow the 1-based labels of the construction:
    ``mu[(k, j)]``, ``nu[j]``, ``rho[(k, j)]`` (S-BCJ-SNC) or ``rho[i]``
    (S-CoJ-SNC, masked column ``i``) and ``sigma[(target, basis)]`` with
    masked-column labels.  ``dest_groups`` lists the entities the
    destination resolves: each is a set of symbol columns that share one
    received coefficient (aligned jamming sums have several).
    ``beamformed`` lists the columns that must vanish at the destination.
    """

    cfg: SchemeConfig
    channel: ChannelDraw
    gamma: GeneratorMatrix | None
    layout: SymbolLayout
    payloads: tuple
    weights: tuple
    local: np.ndarray
    mu: dict = field(default_factory=dict)
    nu: dict = field(default_factory=dict)
    rho: dict = field(default_factory=dict)
    sigma: dict = field(default_factory=dict)
    dest_groups: tuple = ()
    beamformed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    rho_max: float = 0.0

    @cached_property
    def tx_matrix(self) -> np.ndarray:
        """``A`` with ``X = A @ z``; row ``k`` is relay ``k``."""
        A = self.local.copy()
        for k, (w, S) in enumerate(zip(self.weights, self.payloads)):
            if S.shape[0]:
                A[k] += w @ S
        return A

    @cached_property
    def y1_coeffs(self) -> np.ndarray:
        return self.channel.h @ self.tx_matrix

    @cached_property
    def y2_coeffs(self) -> np.ndarray:
        return self.channel.g @ self.tx_matrix

    @property
    def scheme(self) -> Scheme:
        return self.cfg.scheme

    def payload_for(self, T) -> np.ndarray:
        """Stacked payload rows of the 1-based relay set ``T``."""
        rows = [self.payloads[t - 1] for t in T]
        if not rows:
            return np.zeros((0, self.layout.n), dtype=np.int64)
        return np.vstack(rows)


def _role_gains(cfg: SchemeConfig, ch: ChannelDraw) -> np.ndarray:
    if ch.M != cfg.M:
        raise ValueError(f"channel has {ch.M} relays, config has {cfg.M}")
    return ch.h[cfg.role_order]


def _to_physical(cfg, role_list):
    out = [None] * cfg.M
    for role, phys in enumerate(cfg.role_order):
        out[phys] = role_list[role]
    return tuple(out)


def _bcj_plan(cfg, ch, gamma, rng, coeffs):
    M, N, W = cfg.M, cfg.N, cfg.W
    if coeffs is None:
        if rng is None:
            raise ValueError("either coeffs or rng must be given")
        coeffs = draw_coefficients(cfg, rng)
    mu, nu = coeffs.mu, coeffs.nu
    if mu.shape != (N, M - 1) or nu.shape != (N,):
        raise ValueError("coefficient draw does not match config")
    layout, payloads = payload_structure(cfg, gamma)
    if cfg.has_mask and gamma is None:
        gamma = build_generator(cfg)
    h = _role_gains(cfg, ch)
    order = cfg.role_order
    n = layout.n

    role_weights = [mu[k].copy() if k < N else np.zeros(0) for k in range(M)]
    local_role = np.zeros((M, n))
    for k in range(M):
        for j in range(N):
            local_role[k, layout.index("U", k + 1, j + 1)] = nu[j] / h[k]

    rho, sigma = {}, {}
    rho_max = 0.0
    if cfg.has_mask:
        targets = np.arange(N * (M - 1))
        basis = np.arange(N * (M - 1), M * (M - 1))
        X = _masking_expansion(cfg, gamma)
        # destination weight of masked column (a, b) is h_a mu_{a,b}
        w_target = (h[:N, None] * mu).ravel()
        rho_vec = -(X @ w_target) / h[basis // (M - 1)]
        rho_max = rho_bound(cfg, gamma, coeffs)
        for bi, b in enumerate(basis):
            k, j = divmod(int(b), M - 1)
            role_weights[k] = np.append(role_weights[k], rho_vec[bi])
            rho[(int(order[k]) + 1, j + 1)] = float(rho_vec[bi])
        for ti, t in enumerate(targets):
            a, bb = divmod(int(t), M - 1)
            for bi, b in enumerate(basis):
                k, j = divmod(int(b), M - 1)
                sigma[((a + 1, bb + 1), (k + 1, j + 1))] = float(X[bi, ti])

    local = np.zeros_like(local_role)
    local[order] = local_role
    groups = [((("V",) + lab[1]), (c,)) for c, lab in enumerate(layout.labels) if lab[0] == "V"]
    for j in range(N):
        cols = tuple(layout.index("U", k + 1, j + 1) for k in range(M))
        groups.append((("Usum", j + 1), cols))
    return PrecodingPlan(
        cfg=cfg, channel=ch, gamma=gamma, layout=layout, payloads=tuple(payloads),
        weights=_to_physical(cfg, role_weights), local=local,
        mu={(int(order[k]) + 1, j + 1): float(mu[k, j]) for k in range(N) for j in range(M - 1)},
        nu={j + 1: float(nu[j]) for j in range(N)},
        rho=rho, sigma=sigma, dest_groups=tuple(groups),
        beamformed=layout.columns("F"), rho_max=rho_max,
    )


def _coj_plan(cfg, ch, gamma):
    M, N = cfg.M, cfg.N
    layout, payloads = payload_structure(cfg, gamma)
    if cfg.has_mask and gamma is None:
        gamma = build_generator(cfg)
    h = _role_gains(cfg, ch)
    order = cfg.role_order
    role_weights = []
    for k in range(M):
        if k < N:
            role_weights.append(np.array([1.0, -h[(k + 1) % N] / h[k]]))
        else:
            role_weights.append(np.zeros(0))

    rho, sigma = {}, {}
    rho_max = 0.0
    if cfg.has_mask:
        targets = np.arange(2 * N)
        basis = np.arange(2 * N, 2 * M)
        X = _masking_expansion(cfg, gamma)
        # destination weights of L_{2k-1}, L_{2k} sent by secure relay k
        w_target = np.empty(2 * N)
        w_target[0::2] = h[:N]
        w_target[1::2] = -h[(np.arange(N) + 1) % N]
        rho_vec = -(X @ w_target) / h[basis // 2]
        rho_max = rho_bound(cfg, gamma)
        for k in range(N, M):
            role_weights[k] = rho_vec[2 * (k - N): 2 * (k - N) + 2].copy()
        for bi, b in enumerate(basis):
            rho[int(b) + 1] = float(rho_vec[bi])
            for ti, t in enumerate(targets):
                sigma[(int(t) + 1, int(b) + 1)] = float(X[bi, ti])

    groups = tuple((("V", k + 1), (layout.index("V", k + 1),)) for k in range(N))
    beamformed = np.concatenate([layout.columns("U"), layout.columns("F")])
    return PrecodingPlan(
        cfg=cfg, channel=ch, gamma=gamma, layout=layout, payloads=tuple(payloads),
        weights=_to_physical(cfg, role_weights), local=np.zeros((M, layout.n)),
        rho=rho, sigma=sigma, dest_groups=groups, beamformed=beamformed, rho_max=rho_max,
    )


def plan_sbcj(cfg: SchemeConfig, ch: ChannelDraw, rng=None, *, coeffs: CoefficientDraw | None = None) -> PrecodingPlan:
    """Aligned blind cooperative jamming with known wiretapped links."""
    if cfg.scheme is not Scheme.SBCJ:
        cfg = _with_scheme(cfg, Scheme.SBCJ)
    return _bcj_plan(cfg, ch, None, rng, coeffs)


def plan_scoj(cfg: SchemeConfig, ch: ChannelDraw, rng=None) -> PrecodingPlan:
    """Computation-for-jamming: jamming symbols are nulled at the destination."""
    if cfg.scheme is not Scheme.SCOJ:
        cfg = _with_scheme(cfg, Scheme.SCOJ)
    return _coj_plan(cfg, ch, None)


def plan_sbcj_snc(cfg: SchemeConfig, ch: ChannelDraw, gamma: GeneratorMatrix | None = None, rng=None, *,
                  coeffs: CoefficientDraw | None = None) -> PrecodingPlan:
    """S-BCJ with every link entry masked by ``L = F Gamma``."""
    if cfg.scheme is not Scheme.SBCJ_SNC:
        cfg = _with_scheme(cfg, Scheme.SBCJ_SNC)
    return _bcj_plan(cfg, ch, gamma, rng, coeffs)


def plan_scoj_snc(cfg: SchemeConfig, ch: ChannelDraw, gamma: GeneratorMatrix | None = None, rng=None) -> PrecodingPlan:
    """S-CoJ with masked links; ``U`` and ``F`` both vanish at the destination."""
    if cfg.scheme is not Scheme.SCOJ_SNC:
        cfg = _with_scheme(cfg, Scheme.SCOJ_SNC)
    return _coj_plan(cfg, ch, gamma)


def _with_scheme(cfg: SchemeConfig, scheme: Scheme) -> SchemeConfig:
    return dataclasses.replace(cfg, scheme=scheme)


def build_plan(cfg: SchemeConfig, ch: ChannelDraw, gamma: GeneratorMatrix | None = None, rng=None, *,
               coeffs: CoefficientDraw | None = None) -> PrecodingPlan:
    """Dispatch to the planner of ``cfg.scheme``."""
    if cfg.scheme.is_coj:
        return _coj_plan(cfg, ch, gamma)
    return _bcj_plan(cfg, ch, gamma, rng, coeffs)


def amplitude_bound(cfg: SchemeConfig, rho_max: float = 0.0, p: int | None = None) -> float:
    """``gamma_tilde`` such that ``|X_k| <= gamma_tilde * delta * Q`` for every relay."""
    M, N, W, B = cfg.M, cfg.N, cfg.W, cfg.B
    if cfg.has_mask and p is None:
        p = build_generator(cfg).p
    if cfg.scheme.is_coj:
        if not cfg.has_mask:
            return 2 + B**2
        s = 2 * W * (p - 1)
        return max(2 + s + B**2 * (1 + s), 4 * rho_max * W * (p - 1))
    if not cfg.has_mask:
        return (M - 1 + N * B) * B
    s = W * (M - 1) * (p - 1)
    return max((M - 1) * B * (s + 1), (M - 1) * rho_max * s) + N * B**2


def scheme_spec(plan: PrecodingPlan, P: float) -> ConstellationSpec:
    """Constellation for ``plan`` at power ``P``."""
    cfg = plan.cfg
    p = plan.gamma.p if plan.gamma is not None else None
    gt = amplitude_bound(cfg, plan.rho_max, p)
    return scale_params(P, scheme_tau(cfg), cfg.epsilon, gt)


@dataclass(frozen=True, eq=False)
class Frame:
    """One channel use.

    ``q`` holds the integer index of every symbol, ``z = delta * q`` the
    real values; ``V``, ``U``, ``F`` and ``L = F Gamma`` are the real
    sub-vectors, ``S[k]`` the payload of relay ``k`` and ``X`` the relay
    inputs.
    """

    q: np.ndarray
    delta: float
    V: np.ndarray
    U: np.ndarray
    F: np.ndarray
    L: np.ndarray
    S: tuple
    X: np.ndarray
    Y1: float
    Y2: float

    @property
    def z(self) -> np.ndarray:
        return self.delta * self.q


def encode_frame(plan: PrecodingPlan, spec: ConstellationSpec, rng: np.random.Generator, *,
                 noise_std: float = 1.0) -> Frame:
    """Sample all symbols, form link payloads and relay inputs, emit ``Y1, Y2``.

    Raises
    ------
    PowerConstraintError, LinkCapacityError
        When the constellation does not fit the power budget or a link.
    """
    cfg = plan.cfg
    layout = plan.layout
    cap = cfg.link_capacity
    if cap is None:
        cap = link_capacity_bits(cfg, spec.Q, plan.gamma.p if plan.gamma is not None else None)
    for k, S in enumerate(plan.payloads):
        need = math.log2(payload_alphabet_size(S, spec.Q))
        if need > cap + 1e-9:
            raise LinkCapacityError(f"relay {k + 1} payload needs {need:.3f} bits > C={cap:.3f}")

    q = sample_indices(spec.Q, rng, size=layout.n).astype(np.int64)
    z = spec.delta * q
    S = tuple(P_k @ z for P_k in plan.payloads)
    X = np.array([w @ s if s.size else 0.0 for w, s in zip(plan.weights, S)]) + plan.local @ z
    limit = math.sqrt(spec.P) * (1 + 1e-9)
    if np.any(np.abs(X) > limit):
        k = int(np.argmax(np.abs(X)))
        raise PowerConstraintError(f"|X_{k + 1}| = {abs(X[k]):.6g} exceeds sqrt(P) = {math.sqrt(spec.P):.6g}")
    f_cols = layout.columns("F")
    if plan.gamma is not None:
        L = z[f_cols] @ plan.gamma.entries
    else:
        L = np.zeros(0)
    Y1 = mac_output(X, plan.channel.h, noise_std, rng)
    Y2 = mac_output(X, plan.channel.g, noise_std, rng)
    return Frame(q=q, delta=spec.delta, V=z[layout.columns("V")], U=z[layout.columns("U")],
                 F=z[f_cols], L=L, S=S, X=X, Y1=Y1, Y2=Y2)


def dof_formula(M: int, N: int, alpha):
    """Secure d.o.f. ``d_s(alpha)`` of the wiretapped diamond-relay channel.

    Exact when ``alpha`` is an ``int`` or ``Fraction``.
    """
    if not 1 <= N <= M:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={M}")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if isinstance(alpha, (int, Fraction)):
        alpha = Fraction(alpha)
        one = Fraction(1)
    else:
        one = 1.0
    if N == 1:
        return min(alpha, Fraction(M - 1, M) if isinstance(alpha, Fraction) else (M - 1) / M)
    return min(N * alpha, (N * alpha + M - 1) / (M + 1), one)


def corner_points(M: int, N: int) -> list[tuple[Fraction, Fraction]]:
    """Achievable corner points ``(alpha, d_s)`` as exact fractions."""
    pts = [(Fraction(M - 1, M * N), Fraction(M - 1, M))]
    if N >= 2:
        pts.append((Fraction(2, N), Fraction(1)))
    return pts


def required_link_dof(alphabet_sizes, P: float) -> float:
    """Link d.o.f. ``max_k log2|S_k| / (0.5 log2 P)`` consumed by one frame."""
    if P <= 1:
        raise ValueError("P must exceed 1")
    sizes = list(alphabet_sizes)
    if not sizes:
        return 0.0
    return max(math.log2(s) for s in sizes) / (0.5 * math.log2(P))


def rate_bits(cfg: SchemeConfig, Q: int) -> float:
    """``log2`` of the message alphabet size per channel use."""
    n_v = cfg.N if cfg.scheme.is_coj else cfg.N * (cfg.M - 1)
    return n_v * math.log2(2 * Q + 1)
