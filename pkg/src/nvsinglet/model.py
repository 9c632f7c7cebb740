"""Physical model: parameters, Hamiltonians and collapse operators.

Two NV centers (three levels each: |0>, |1>, |e>) couple to whispering-gallery
resonators that are linked either through a fiber mode (``fiber`` variant) or
by direct photon hopping (``hopping`` variant). Everything is expressed in the
rotated interaction frame, in units of the reference NV-resonator coupling g
(time in 1/g).

Model tiers, from most to least microscopic:

  FullRotated     three normal modes (fiber: c, c1, c2 / hopping: d1, d2),
                  time-dependent phases up to the mode splitting
  SingleModeRWA   the two detuned normal modes dropped; only the resonant
                  mode survives
  EffectiveRaman  excited state eliminated; static qubit+mode Hamiltonian
  CollectiveHd    mode eliminated too; 4x4 in the collective basis
                  (|00>, |T>, |11>, |S>) with the engineered jump operator
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hilbert import (
    LayoutError,
    Operator,
    SpaceLayout,
    annihilation,
    proj,
    tensor,
)

SQRT2 = math.sqrt(2.0)


class Variant(enum.Enum):
    FIBER = "fiber"
    HOPPING = "hopping"


class Tier(enum.Enum):
    FULL_ROTATED = "FullRotated"
    SINGLE_MODE_RWA = "SingleModeRWA"
    EFFECTIVE_RAMAN = "EffectiveRaman"
    COLLECTIVE_HD = "CollectiveHd"


class ZeroDetuningError(ValueError):
    pass


class ConsistencyError(ValueError):
    """The parameter set does not define a single Theta / g_eff / Delta-tilde."""


_CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """All physical inputs, in units of g (rates/frequencies) and 1/g (time).

    Drive amplitudes and couplings may be complex; detunings are real.
    ``stark_comp`` adds a static s_j |1>_j<1| term in the three-level tiers
    (optional compensation of the residual light shift, off by default).
    ``gamma_spon`` enables the optional spontaneous-emission hook
    (|0><e| and |1><e| channels at that rate on each NV).
    """

    variant: Variant = Variant.FIBER
    g1: complex = 1.0
    g2: complex = 1.0
    Omega1: complex = 1.0
    Omega2: complex = -1.0
    Lambda1: complex = 1.0
    Lambda2: complex = 1.0
    Pi1: complex = 0.1
    Pi2: complex = 0.1
    Sigma1: complex = math.sqrt(5.0) / 5.0
    Sigma2: complex = math.sqrt(5.0) / 5.0
    Delta1: float = 10.0
    Delta2: float = 10.0
    DeltaP1: float = -10.0
    DeltaP2: float = -10.0
    delta1: float = 20.0
    delta2: float = -20.0
    nu: float = 100.0
    phi: float = 0.0
    J: float = 100.0
    DeltaBar1: float | None = None
    DeltaBar2: float | None = None
    kappa: float = 0.5
    kappa_f: float | None = None      # defaults to kappa
    gamma_phi: float = 0.0
    gamma_spon: float = 0.0
    cutoffs: tuple[tuple[str, int], ...] = ()
    stark_comp: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for name in ("kappa", "gamma_phi", "gamma_spon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.kappa_f is not None and self.kappa_f < 0:
            raise ValueError("kappa_f must be nonnegative")
        for lbl, cut in self.cutoffs:
            if cut < 1:
                raise ValueError(f"cutoff for mode {lbl!r} must be >= 1")
        if self.variant is Variant.HOPPING:
            bar1 = self.DeltaBar1 if self.DeltaBar1 is not None else self.Delta1 + self.J
            bar2 = self.DeltaBar2 if self.DeltaBar2 is not None else self.Delta2 + self.J
            if abs(bar1 - self.J - self.Delta1) > 1e-12 or abs(bar2 - self.J - self.Delta2) > 1e-12:
                raise ValueError("hopping variant requires DeltaBar_j - J = Delta_j")
            object.__setattr__(self, "DeltaBar1", bar1)
            object.__setattr__(self, "DeltaBar2", bar2)

    @property
    def kappa_fiber(self) -> float:
        return self.kappa if self.kappa_f is None else self.kappa_f

    def cutoff(self, label: str) -> int:
        for lbl, cut in self.cutoffs:
            if lbl == label:
                return cut
        return 1

    def with_overrides(self, **kwargs) -> "SystemParams":
        if "variant" in kwargs and isinstance(kwargs["variant"], str):
            kwargs["variant"] = Variant(kwargs["variant"])
        return replace(self, **kwargs)


@dataclass(frozen=True)
class EffectiveParams:
    """Derived quantities of the effective Raman model."""

    Theta: complex
    g_eff: complex
    DeltaTilde1: float
    DeltaTilde2: float
    DeltaTilde: float
    kappa_eff: float

    def as_dict(self) -> dict:
        return {
            "Theta": _c2j(self.Theta),
            "g_eff": _c2j(self.g_eff),
            "DeltaTilde1": self.DeltaTilde1,
            "DeltaTilde2": self.DeltaTilde2,
            "DeltaTilde": self.DeltaTilde,
            "kappa_eff": self.kappa_eff,
        }


def _c2j(z: complex):
    return z.real if abs(complex(z).imag) == 0.0 else [z.real, z.imag]


def _check_equal(name: str, lhs: complex, rhs: complex):
    scale = max(abs(lhs), abs(rhs), 1.0)
    if abs(lhs - rhs) > _CONSISTENCY_TOL * scale:
        raise ConsistencyError(
            f"{name} is not single-valued: center 1 gives {lhs}, center 2 gives {rhs}"
        )


def effective_params(p: SystemParams) -> EffectiveParams:
    """Theta, g_eff, the Stark shifts and the engineered decay rate.

    Raises ZeroDetuningError / ConsistencyError when the parameter set does
    not define a single (Theta, g_eff, Delta-tilde).
    """
    for name in ("Delta1", "Delta2", "DeltaP1", "DeltaP2", "delta1", "delta2"):
        if getattr(p, name) == 0.0:
            raise ZeroDetuningError(f"{name} must be nonzero")
    theta1 = p.Lambda1 * np.conj(p.Pi1) / p.DeltaP1
    theta2 = p.Lambda2 * np.conj(p.Pi2) / p.DeltaP2
    _check_equal("Theta", theta1, theta2)
    ge1 = p.Omega1 * np.conj(p.g1) / (SQRT2 * p.Delta1)
    sign = -1.0 if p.variant is Variant.FIBER else +1.0
    ge2 = sign * p.Omega2 * np.conj(p.g2) / (SQRT2 * p.Delta2)
    _check_equal("g_eff", ge1, ge2)
    dt1 = abs(p.Sigma1) ** 2 / p.delta1
    dt2 = abs(p.Sigma2) ** 2 / p.delta2
    _check_equal("DeltaTilde (Delta1~=-Delta2~)", dt1, -dt2)
    if p.kappa == 0.0:
        raise ZeroDetuningError("kappa must be nonzero to define kappa_eff")
    g_eff = complex(ge1)
    return EffectiveParams(
        Theta=complex(theta1),
        g_eff=g_eff,
        DeltaTilde1=float(dt1),
        DeltaTilde2=float(dt2),
        DeltaTilde=float(dt1),
        kappa_eff=8.0 * abs(g_eff) ** 2 / p.kappa,
    )


def mode_transform(p: SystemParams) -> np.ndarray:
    """Unitary map from bare modes to normal modes.

    Fiber:   (a1, a2, b) -> (c, c1, c2)
    Hopping: (a1, a2)    -> (d1, d2)
    """
    if p.variant is Variant.FIBER:
        e = np.exp(-1j * p.phi)
        return np.array(
            [
                [1 / SQRT2, -e / SQRT2, 0.0],
                [0.5, e / 2.0, SQRT2 / 2.0],
                [0.5, e / 2.0, -SQRT2 / 2.0],
            ],
            dtype=complex,
        )
    return np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2


# ---------------------------------------------------------------------------
# layouts

NV_DIM = 3  # |0>, |1>, |e>


def mode_labels(p: SystemParams, tier: Tier) -> tuple[str, ...]:
    if tier is Tier.COLLECTIVE_HD:
        return ()
    if p.variant is Variant.FIBER:
        if tier is Tier.FULL_ROTATED:
            return ("c", "c1", "c2")
        return ("c",)
    if tier is Tier.FULL_ROTATED:
        return ("d1", "d2")
    return ("d1",)


def layout_for(p: SystemParams, tier: Tier) -> SpaceLayout:
    if tier is Tier.COLLECTIVE_HD:
        return SpaceLayout([("collective", 4)])
    nv_dim = 2 if tier is Tier.EFFECTIVE_RAMAN else NV_DIM
    subs = [("NV1", nv_dim), ("NV2", nv_dim)]
    subs += [(m, p.cutoff(m) + 1) for m in mode_labels(p, tier)]
    return SpaceLayout(subs)


# collective basis order used throughout: |00>, |T>, |11>, |S>
COLLECTIVE_LABELS = ("00", "T", "11", "S")


@dataclass(frozen=True)
class TermSeries:
    """H(t) = sum_k exp(i w_k t) M_k over a fixed layout.

    The term list is closed under Hermitian conjugation, so every evaluation
    is Hermitian.
    """

    layout: SpaceLayout
    terms: tuple[tuple[float, np.ndarray], ...] = field(repr=False)

    @property
    def static(self) -> bool:
        return all(w == 0.0 for w, _ in self.terms)

    def evaluate(self, t: float) -> np.ndarray:
        d = self.layout.dim
        out = np.zeros((d, d), dtype=complex)
        for w, m in self.terms:
            out += (np.exp(1j * w * t) if w != 0.0 else 1.0) * m
        return out


class _TermBuilder:
    def __init__(self, layout: SpaceLayout):
        self.layout = layout
        self._acc: dict[float, np.ndarray] = {}

    def add(self, omega: float, op: Operator):
        """Add omega/matrix plus its Hermitian conjugate at -omega."""
        self._add_raw(float(omega), op.matrix)
        self._add_raw(-float(omega), op.matrix.conj().T)

    def add_static_hermitian(self, op: Operator):
        self._add_raw(0.0, op.matrix)

    def _add_raw(self, omega: float, m: np.ndarray):
        key = round(omega, 12)
        if key not in self._acc:
            self._acc[key] = np.zeros((self.layout.dim,) * 2, dtype=complex)
        self._acc[key] = self._acc[key] + m

    def build(self) -> TermSeries:
        terms = tuple(
            (w, m) for w, m in sorted(self._acc.items(), key=lambda kv: kv[0])
            if np.any(m)
        )
        return TermSeries(self.layout, terms)


def _nv_op(layout: SpaceLayout, j: int, m: np.ndarray) -> Operator:
    return tensor([(f"NV{j}", m)], layout)


def _drive_terms(b: _TermBuilder, p: SystemParams, layout: SpaceLayout):
    """Classical-drive part shared by FullRotated and SingleModeRWA."""
    drives = [
        (1, p.Omega1, proj(3, 2, 0), p.Delta1),
        (2, p.Omega2, proj(3, 2, 0), p.Delta2),
        (1, p.Lambda1, proj(3, 2, 0), p.DeltaP1),
        (2, p.Lambda2, proj(3, 2, 0), p.DeltaP2),
        (1, p.Pi1, proj(3, 2, 1), p.DeltaP1),
        (2, p.Pi2, proj(3, 2, 1), p.DeltaP2),
        (1, p.Sigma1, proj(3, 2, 1), p.delta1),
        (2, p.Sigma2, proj(3, 2, 1), p.delta2),
    ]
    for j, amp, m, w in drives:
        if amp != 0.0:
            b.add(w, amp * _nv_op(layout, j, m))
    for j, s in enumerate(p.stark_comp, start=1):
        if s != 0.0:
            b.add_static_hermitian(s * _nv_op(layout, j, proj(3, 1, 1)))


def hamiltonian_terms(p: SystemParams, tier: Tier) -> TermSeries:
    """Oscillating-term decomposition of the tier Hamiltonian."""
    layout = layout_for(p, tier)
    b = _TermBuilder(layout)
    e1 = proj(3, 2, 1)  # |e><1| on one NV

    if tier is Tier.FULL_ROTATED:
        _drive_terms(b, p, layout)
        if p.variant is Variant.FIBER:
            s2nu = SQRT2 * p.nu
            for j, g, sgn in ((1, p.g1, +1.0), (2, p.g2, -1.0)):
                half = 0.5 * g
                c = annihilation(p.cutoff("c"))
                c1 = annihilation(p.cutoff("c1"))
                c2 = annihilation(p.cutoff("c2"))
                dj = p.Delta1 if j == 1 else p.Delta2
                b.add(dj - s2nu, half * tensor([(f"NV{j}", e1), ("c1", c1)], layout))
                b.add(dj + s2nu, half * tensor([(f"NV{j}", e1), ("c2", c2)], layout))
                b.add(dj, sgn * SQRT2 * half * tensor([(f"NV{j}", e1), ("c", c)], layout))
        else:
            for j, g, sgn in ((1, p.g1, +1.0), (2, p.g2, -1.0)):
                coef = g / SQRT2
                d1 = annihilation(p.cutoff("d1"))
                d2 = annihilation(p.cutoff("d2"))
                bar = p.DeltaBar1 if j == 1 else p.DeltaBar2
                b.add(bar - p.J, coef * tensor([(f"NV{j}", e1), ("d1", d1)], layout))
                b.add(bar + p.J, sgn * coef * tensor([(f"NV{j}", e1), ("d2", d2)], layout))
        return b.build()

    if tier is Tier.SINGLE_MODE_RWA:
        _drive_terms(b, p, layout)
        mode = mode_labels(p, tier)[0]
        a = annihilation(p.cutoff(mode))
        if p.variant is Variant.FIBER:
            b.add(p.Delta1, (p.g1 / SQRT2) * tensor([("NV1", e1), (mode, a)], layout))
            b.add(p.Delta2, (-p.g2 / SQRT2) * tensor([("NV2", e1), (mode, a)], layout))
        else:
            b.add(p.Delta1, (p.g1 / SQRT2) * tensor([("NV1", e1), (mode, a)], layout))
            b.add(p.Delta2, (p.g2 / SQRT2) * tensor([("NV2", e1), (mode, a)], layout))
        return b.build()

    eff = effective_params(p)

    if tier is Tier.EFFECTIVE_RAMAN:
        mode = mode_labels(p, tier)[0]
        a = annihilation(p.cutoff(mode))
        up = proj(2, 1, 0)     # |1><0| on a two-level qubit
        n1 = proj(2, 1, 1)
        b.add_static_hermitian((-eff.DeltaTilde1) * _q(layout, 1, n1))
        b.add_static_hermitian((-eff.DeltaTilde2) * _q(layout, 2, n1))
        for j in (1, 2):
            b.add(0.0, (-eff.Theta) * _q(layout, j, up))
            b.add(0.0, (-eff.g_eff) * tensor(
                [(f"NV{j}", up), (mode, a.conj().T)], layout))
        return b.build()

    if tier is Tier.COLLECTIVE_HD:
        hd = np.zeros((4, 4), dtype=complex)
        th = eff.Theta
        dt = eff.DeltaTilde
        hd[2, 1] += -SQRT2 * th       # |11><T|
        hd[1, 0] += -SQRT2 * th       # |T><00|
        hd[3, 1] += +dt               # |S><T|
        hd = hd + hd.conj().T
        b.add_static_hermitian(Operator(layout, hd))
        return b.build()

    raise ValueError(f"unknown tier {tier}")


def _q(layout: SpaceLayout, j: int, m: np.ndarray) -> Operator:
    return tensor([(f"NV{j}", m)], layout)


def build_hamiltonian(p: SystemParams, tier: Tier, t: float = 0.0) -> Operator:
    """The tier Hamiltonian with all phase factors evaluated at time t."""
    series = hamiltonian_terms(p, tier)
    return Operator(series.layout, series.evaluate(t)).require_hermitian()


# ---------------------------------------------------------------------------
# collapse operators


def _sigma_z_matrix(dim: int) -> np.ndarray:
    # |1><1| - |0><0|, padded with 0 on |e> in three-level spaces
    m = np.zeros((dim, dim), dtype=complex)
    m[0, 0] = -1.0
    m[1, 1] = +1.0
    return m


def collective_sigma_z(j: int) -> np.ndarray:
    """sigma_z of NV j expressed in the (|00>, |T>, |11>, |S>) basis."""
    from .analysis import collective_basis_matrix

    bmat = collective_basis_matrix()
    sz = _sigma_z_matrix(2)
    eye = np.eye(2)
    prod = np.kron(sz, eye) if j == 1 else np.kron(eye, sz)
    return bmat.conj().T @ prod @ bmat


def build_collapse_ops(p: SystemParams, tier: Tier) -> list[Operator]:
    """Jump operators in standard form: D[L]rho = L rho L^+ - 1/2 {L^+L, rho}.

    The kappa(2 L rho L^+ - ...) convention of the model corresponds to jump
    operators sqrt(2 kappa) L, which is what this returns.
    """
    layout = layout_for(p, tier)
    ops: list[Operator] = []

    if tier is Tier.FULL_ROTATED:
        if p.variant is Variant.FIBER:
            c = tensor([("c", annihilation(p.cutoff("c")))], layout).matrix
            c1 = tensor([("c1", annihilation(p.cutoff("c1")))], layout).matrix
            c2 = tensor([("c2", annihilation(p.cutoff("c2")))], layout).matrix
            eip = np.exp(1j * p.phi)
            a1 = 0.5 * (c1 + c2 + SQRT2 * c)
            a2 = 0.5 * eip * (c1 + c2 - SQRT2 * c)
            bmode = (c1 - c2) / SQRT2
            ops += [
                Operator(layout, math.sqrt(2 * p.kappa) * a1),
                Operator(layout, math.sqrt(2 * p.kappa) * a2),
                Operator(layout, math.sqrt(2 * p.kappa_fiber) * bmode),
            ]
        else:
            d1 = tensor([("d1", annihilation(p.cutoff("d1")))], layout).matrix
            d2 = tensor([("d2", annihilation(p.cutoff("d2")))], layout).matrix
            a1 = (d1 + d2) / SQRT2
            a2 = (d1 - d2) / SQRT2
            ops += [
                Operator(layout, math.sqrt(2 * p.kappa) * a1),
                Operator(layout, math.sqrt(2 * p.kappa) * a2),
            ]
    elif tier in (Tier.SINGLE_MODE_RWA, Tier.EFFECTIVE_RAMAN):
        mode = mode_labels(p, tier)[0]
        a = tensor([(mode, annihilation(p.cutoff(mode)))], layout)
        ops.append(math.sqrt(2 * p.kappa) * a)
    elif tier is Tier.COLLECTIVE_HD:
        eff = effective_params(p)
        le = np.zeros((4, 4), dtype=complex)
        le[2, 1] = 1.0   # |11><T|
        le[1, 0] = 1.0   # |T><00|
        ops.append(Operator(layout, math.sqrt(eff.kappa_eff) * le))
    else:
        raise ValueError(f"unknown tier {tier}")

    if p.gamma_phi > 0.0:
        coef = math.sqrt(2 * p.gamma_phi)
        if tier is Tier.COLLECTIVE_HD:
            for j in (1, 2):
                ops.append(Operator(layout, coef * collective_sigma_z(j)))
        else:
            dim = 2 if tier is Tier.EFFECTIVE_RAMAN else 3
            for j in (1, 2):
                ops.append(coef * _nv_op(layout, j, _sigma_z_matrix(dim)))

    if p.gamma_spon > 0.0 and tier in (Tier.FULL_ROTATED, Tier.SINGLE_MODE_RWA):
        coef = math.sqrt(2 * p.gamma_spon)
        for j in (1, 2):
            ops.append(coef * _nv_op(layout, j, proj(3, 0, 2)))
            ops.append(coef * _nv_op(layout, j, proj(3, 1, 2)))

    return ops


# ---------------------------------------------------------------------------
# validity checks


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    ratio: float
    passes: bool
    detail: str


@dataclass(frozen=True)
class ValidityReport:
    threshold: float
    checks: tuple[InequalityCheck, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passes for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "all_pass": self.all_pass,
            "checks": [
                {"name": c.name, "ratio": c.ratio, "pass": c.passes, "detail": c.detail}
                for c in self.checks
            ],
        }


def check_validity(p: SystemParams, threshold: float = 5.0) -> ValidityReport:
    """Margins of the regime-of-validity inequalities (report, never raises)."""
    checks = []

    def add(name, large, small, detail):
        ratio = math.inf if small == 0 else abs(large) / abs(small)
        checks.append(InequalityCheck(name, float(ratio), ratio >= threshold, detail))

    if p.variant is Variant.FIBER:
        small = max(abs(p.Delta1), abs(p.Delta2), abs(p.DeltaP1), abs(p.DeltaP2),
                    abs(p.delta1), abs(p.delta2), abs(p.g1), abs(p.g2))
        add("mode_splitting", p.nu, small, "nu >> {Delta_j, Delta'_j, delta_j, g_j}")
    else:
        for j, bar, dj in ((1, p.DeltaBar1, p.Delta1), (2, p.DeltaBar2, p.Delta2)):
            small = max(abs(dj), abs(p.DeltaP1 if j == 1 else p.DeltaP2),
                        abs(p.delta1 if j == 1 else p.delta2),
                        abs(p.g1 if j == 1 else p.g2))
            add(f"mode_splitting_{j}", bar + p.J, small,
                "|DeltaBar_j + J| >> {Delta_j, Delta'_j, delta_j, g_j}")

    for j in (1, 2):
        dj = getattr(p, f"Delta{j}")
        dpj = getattr(p, f"DeltaP{j}")
        dlj = getattr(p, f"delta{j}")
        dets = [abs(dj), abs(dpj), abs(dlj), abs(dj - dpj), abs(dj - dlj), abs(dlj - dpj)]
        amps = [abs(getattr(p, n + str(j))) for n in ("Omega", "Lambda", "Pi", "g")]
        add(f"large_detuning_{j}", min(dets), max(amps),
            "detunings and their differences >> drive amplitudes")

    try:
        eff = effective_params(p)
        small_rates = min(abs(eff.Theta), abs(eff.g_eff) ** 2 / p.kappa)
        add("dephasing", small_rates, p.gamma_phi, "gamma_phi < {Theta, g_eff^2/kappa}")
    except (ConsistencyError, ZeroDetuningError):
        checks.append(InequalityCheck("dephasing", math.nan, False,
                                      "effective parameters undefined"))

    return ValidityReport(threshold, tuple(checks))


@dataclass(frozen=True)
class ResonanceReport:
    residuals: tuple[float, float]
    theta_abs: float
    rel_to_theta: tuple[float, float]
    within_tol: bool
    tol_rel: float

    def as_dict(self) -> dict:
        return {
            "residuals": list(self.residuals),
            "abs_Theta": self.theta_abs,
            "relative_to_Theta": list(self.rel_to_theta),
            "within_tol": self.within_tol,
            "tol_rel": self.tol_rel,
        }


def resonance_condition_check(p: SystemParams, n_c: float = 0.0,
                              tol_rel: float = 0.05) -> ResonanceReport:
    """Residual of the Raman resonance condition per NV center.

    residual_j = |Omega_j|^2/Delta_j + |Lambda_j|^2/Delta'_j
                 - |Pi_j|^2/Delta'_j - |g_j|^2/(2 Delta_j) * n_c
    reported relative to |Theta| (the drive it competes with).
    """
    res = []
    for j in (1, 2):
        dj = getattr(p, f"Delta{j}")
        dpj = getattr(p, f"DeltaP{j}")
        if dj == 0.0 or dpj == 0.0:
            raise ZeroDetuningError("detunings must be nonzero")
        r = (abs(getattr(p, f"Omega{j}")) ** 2 / dj
             + abs(getattr(p, f"Lambda{j}")) ** 2 / dpj
             - abs(getattr(p, f"Pi{j}")) ** 2 / dpj
             - abs(getattr(p, f"g{j}")) ** 2 / (2 * dj) * n_c)
        res.append(float(r))
    theta_abs = abs(effective_params(p).Theta)
    rel = tuple(abs(r) / theta_abs if theta_abs else math.inf for r in res)
    return ResonanceReport(
        residuals=tuple(res),
        theta_abs=theta_abs,
        rel_to_theta=rel,
        within_tol=all(x <= tol_rel for x in rel),
        tol_rel=tol_rel,
    )
