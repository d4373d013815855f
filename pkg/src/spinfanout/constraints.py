"""Congruence conditions on couplings, timing plans and a sampler for them."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from math import gcd, pi

import numpy as np

from .spin_hamiltonian import CouplingMatrix, validate_pair_structure

CONGRUENCE_TOL = 1e-9
PLAN_TOL = 1e-12


def congruent(a: float, b: float, modulus: float, tol: float = CONGRUENCE_TOL) -> bool:
    """True iff ``(a - b) / modulus`` is within ``tol`` of an integer."""
    return congruence_residual(a, b, modulus) <= tol


def congruence_residual(a: float, b: float, modulus: float) -> float:
    if modulus == 0:
        raise ValueError("congruence modulus must be nonzero")
    r = (a - b) / modulus
    return abs(r - round(r))


@dataclass(frozen=True)
class TimingPlan:
    """Forward time ``T``, uncompute time ``T_prime`` and the ratio ``k``.

    Consistency ``T = k T_prime`` and oddness of ``k`` are reported by
    :func:`check_uncompute_constraints` rather than enforced here, so that
    deliberately broken plans can be simulated.
    """

    T: float = 1.0
    T_prime: float = 1.0
    k: int = 1

    def __post_init__(self):
        if not (self.T > 0 and self.T_prime > 0):
            raise ValueError("evolution times must be positive")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")

    @classmethod
    def from_uncompute_time(cls, T_prime: float = 1.0, k: int = 1) -> TimingPlan:
        return cls(T=k * T_prime, T_prime=T_prime, k=k)

    def well_formed(self) -> bool:
        return self.k % 2 == 1 and abs(self.T - self.k * self.T_prime) < PLAN_TOL

    def to_json_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ModqPlan:
    q: int
    k: int = 1
    k_prime: int = 0
    k_double_prime: int = 0
    k_triple_prime: int | None = None
    T: float = 1.0

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"q must be at least 2, got {self.q}")
        if self.k < 1 or gcd(self.k, self.q) != 1:
            raise ValueError(f"k={self.k} must be a positive integer coprime to q={self.q}")
        if self.k_triple_prime is None:
            object.__setattr__(self, "k_triple_prime", self.q - 1)
        if self.k_triple_prime < 1 or self.k_triple_prime % self.q != self.q - 1:
            raise ValueError(f"k'''={self.k_triple_prime} must be positive and = q-1 (mod q)")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def T_prime(self) -> float:
        return self.k_triple_prime * self.T

    def to_json_dict(self) -> dict:
        return asdict(self)


def plan_from_json_dict(data: dict) -> TimingPlan | ModqPlan:
    if "q" in data:
        return ModqPlan(**{k: data[k] for k in ModqPlan.__dataclass_fields__ if k in data})
    return TimingPlan(**{k: data[k] for k in TimingPlan.__dataclass_fields__ if k in data})


@dataclass
class ConstraintReport:
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def add(self, constraint: str, where, residual: float) -> None:
        self.violations.append((constraint, where, float(residual)))

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [
                {"constraint": c, "where": list(w) if isinstance(w, tuple) else w, "residual": r}
                for c, w, r in self.violations
            ],
        }

    def __str__(self) -> str:
        return json.dumps(self.to_json_dict())


def _reduced_or_report(couplings: CouplingMatrix, report: ConstraintReport):
    red = validate_pair_structure(couplings)
    if not red.passed:
        u, v, values = red.violation
        report.add("pair-structure", (u, v), max(values) - min(values))
        return None
    return red


def _check_all(report, cid, values, target, modulus, tol):
    for where, value in values:
        r = congruence_residual(value, target, modulus)
        if r > tol:
            report.add(cid, where, r)


def check_parity_couplings(
    couplings: CouplingMatrix, plan: TimingPlan, tol: float = CONGRUENCE_TOL
) -> ConstraintReport:
    """``T * Jext(f, l) = pi/2 (mod pi)`` for every pair of pairs."""
    report = ConstraintReport()
    red = _reduced_or_report(couplings, report)
    if red is None:
        return report
    pairs = combinations(range(1, couplings.p + 1), 2)
    _check_all(report, "parity-external", [((f, l), plan.T * red.jext(f, l)) for f, l in pairs], pi / 2, pi, tol)
    return report


def check_uncompute_constraints(
    couplings: CouplingMatrix, plan: TimingPlan, g: float, tol: float = CONGRUENCE_TOL
) -> ConstraintReport:
    """The four conditions that make the second evolution undo the first.

    Constraint ids: ``plan`` (odd ``k`` with ``T = k T'``), ``uncompute-external``,
    ``uncompute-internal`` and ``uncompute-field``.
    """
    report = ConstraintReport()
    if plan.k % 2 != 1:
        report.add("plan", "k", 1.0)
    if abs(plan.T - plan.k * plan.T_prime) >= PLAN_TOL:
        report.add("plan", "T", abs(plan.T - plan.k * plan.T_prime))
    red = _reduced_or_report(couplings, report)
    if red is None:
        return report
    p = couplings.p
    Tp = plan.T_prime
    ext = [((f, l), Tp * red.jext(f, l)) for f, l in combinations(range(1, p + 1), 2)]
    _check_all(report, "uncompute-external", ext, pi / 2, pi, tol)
    _check_all(report, "uncompute-internal", [((f,), Tp * red.jint(f)) for f in range(1, p + 1)], 0.0, pi, tol)
    _check_all(report, "uncompute-field", [("g", Tp * g)], 0.0, pi, tol)
    return report


def check_modq_couplings(
    couplings: CouplingMatrix, plan: ModqPlan, g: float, tol: float = CONGRUENCE_TOL
) -> ConstraintReport:
    """Residue conditions for the Mod_q construction over all ``z`` pairs."""
    report = ConstraintReport()
    red = _reduced_or_report(couplings, report)
    if red is None:
        return report
    z, q, T = couplings.p, plan.q, plan.T
    ext = [((f, l), 2 * T * red.jext(f, l)) for f, l in combinations(range(1, z + 1), 2)]
    _check_all(report, "modq-external", ext, 2 * pi * plan.k / q, 2 * pi, tol)
    internal = [((f,), T * red.jint(f)) for f in range(1, z + 1)]
    _check_all(report, "modq-internal", internal, 2 * pi * plan.k_prime / q, 2 * pi, tol)
    _check_all(report, "modq-field", [("g", T * g)], 2 * pi * plan.k_double_prime / q, 2 * pi, tol)
    return report


# --------------------------------------------------------------------------
# generators


def _check_range(magnitude_range) -> tuple[int, int]:
    lo, hi = (int(v) for v in magnitude_range)
    if lo < 0 or hi < lo:
        raise ValueError(f"empty or negative magnitude range {magnitude_range}")
    return lo, hi


def sample_couplings(
    z: int,
    plan: TimingPlan | ModqPlan,
    kind: str = "parity",
    seed: int = 0,
    magnitude_range=(0, 4),
) -> CouplingMatrix:
    """Random pair-structured couplings satisfying the constraints for ``kind``.

    parity: ``Jext = (pi/2 + m pi) / T'`` and ``Jint = n pi / T'`` with
    ``n >= 1``; since ``k`` is odd these also satisfy the forward condition at
    ``T = k T'``.  modq: ``Jext = (pi k/q + m pi) / T`` and
    ``Jint = (2 pi k'/q + 2 pi n) / T``, never zero.  The result is never
    uniform: if every draw coincides, the last internal coupling moves up by
    one step of its residue class.
    """
    if z < 2:
        raise ValueError(f"need at least two pairs, got z={z}")
    lo, hi = _check_range(magnitude_range)
    rng = np.random.default_rng(seed)
    m = rng.integers(lo, hi + 1, size=(z, z))
    m = np.triu(m, 1)
    m = m + m.T
    if kind == "parity":
        if not isinstance(plan, TimingPlan):
            raise TypeError("parity sampling needs a TimingPlan")
        ext = (pi / 2 + m * pi) / plan.T_prime
        internal = rng.integers(lo + 1, hi + 2, size=z) * pi / plan.T_prime
        step = pi / plan.T_prime
    elif kind == "modq":
        if not isinstance(plan, ModqPlan):
            raise TypeError("modq sampling needs a ModqPlan")
        q = plan.q
        ext = (pi * plan.k / q + m * pi) / plan.T
        n = rng.integers(lo, hi + 1, size=z)
        if plan.k_prime % q == 0:
            # avoid zero internal couplings
            n = np.where(n + plan.k_prime // q == 0, n + 1, n)
        internal = (2 * pi * plan.k_prime / q + 2 * pi * n) / plan.T
        step = 2 * pi / plan.T
    else:
        raise ValueError(f"unknown coupling kind {kind!r}")
    if np.ptp(ext[np.triu_indices(z, 1)]) == 0 and np.ptp(internal) == 0:
        # keep the configuration non-uniform without leaving the residue class
        internal[-1] += step
    return CouplingMatrix.from_pairs(ext, internal)


def sample_field(plan: TimingPlan | ModqPlan, seed: int = 0, magnitude_range=(0, 4)) -> float:
    """Random field strength satisfying the field condition of ``plan``."""
    lo, hi = _check_range(magnitude_range)
    n = int(np.random.default_rng([seed, 1]).integers(lo, hi + 1))
    if isinstance(plan, ModqPlan):
        return (2 * pi * plan.k_double_prime / plan.q + 2 * pi * n) / plan.T
    return (n + 1) * pi / plan.T_prime


# --------------------------------------------------------------------------
# canonical configurations


def cfg_a() -> tuple[CouplingMatrix, float, TimingPlan]:
    """Three pairs with unequal externals ``{pi/2, 3pi/2}``, ``g = pi``, ``T = T' = 1``."""
    ext = np.array(
        [
            [0, pi / 2, 3 * pi / 2],
            [pi / 2, 0, pi / 2],
            [3 * pi / 2, pi / 2, 0],
        ]
    )
    return CouplingMatrix.from_pairs(ext, [pi, 2 * pi, pi]), pi, TimingPlan(1.0, 1.0, 1)


def cfg_b() -> tuple[CouplingMatrix, float, TimingPlan]:
    """Two-pair restriction of :func:`cfg_a`."""
    ext = np.array([[0, pi / 2], [pi / 2, 0]])
    return CouplingMatrix.from_pairs(ext, [pi, 2 * pi]), pi, TimingPlan(1.0, 1.0, 1)
