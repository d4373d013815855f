"""Brute-force references: truth tables, eigen residuals, circuit comparison."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from math import sqrt

import numpy as np

from .encoding import GeneralEncoderParams, all_bitstrings, encode_bitstring, lambda_closed_form
from .engine import Circuit, equal_up_to_global_phase, simulate
from .spin_hamiltonian import CouplingMatrix, build_j_squared_swap, validate_pair_structure


@dataclass(frozen=True)
class TruthTable:
    """Classical reversible map on ``arity`` bits, as ``{input bits: output bits}``."""

    arity: int
    mapping: dict

    def __call__(self, bits) -> tuple[int, ...]:
        return self.mapping[tuple(bits)]

    def unitary(self) -> np.ndarray:
        d = 2**self.arity
        U = np.zeros((d, d))
        for a, b in self.mapping.items():
            U[_index(b), _index(a)] = 1
        return U

    def is_bijection(self) -> bool:
        return len(set(self.mapping.values())) == 2**self.arity

    def compose(self, other: TruthTable) -> TruthTable:
        """``self`` after ``other``."""
        return TruthTable(self.arity, {a: self(other(a)) for a in other.mapping})


def _index(bits) -> int:
    out = 0
    for b in bits:
        out = 2 * out + b
    return out


def _table(arity: int, fn) -> TruthTable:
    return TruthTable(arity, {bits: tuple(fn(bits)) for bits in product((0, 1), repeat=arity)})


def parity_oracle(p: int) -> TruthTable:
    """``|x, t> -> |x, t ^ x_1 ^ ... ^ x_p>``."""
    if p < 1:
        raise ValueError("parity needs at least one input")
    return _table(p + 1, lambda b: b[:p] + ((b[p] + sum(b[:p])) % 2,))


def fanout_oracle(p: int) -> TruthTable:
    """``|x, c> -> |x_1 ^ c, ..., x_p ^ c, c>``."""
    if p < 1:
        raise ValueError("fanout needs at least one target")
    return _table(p + 1, lambda b: tuple(x ^ b[p] for x in b[:p]) + (b[p],))


def modq_oracle(p: int, q: int, generalized: bool = True) -> TruthTable:
    """Mod_q on ``p`` controls.

    generalized: ``q - 1`` targets, ``t_1..t_i`` flipped for ``i = w mod q``.
    standard: one target, flipped iff ``w mod q != 0``.
    """
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")

    def gen(b):
        i = sum(b[:p]) % q
        t = b[p:]
        return b[:p] + tuple(tj ^ (j < i) for j, tj in enumerate(t))

    def std(b):
        return b[:p] + (b[p] ^ int(sum(b[:p]) % q != 0),)

    return _table(p + q - 1, gen) if generalized else _table(p + 1, std)


def eigen_residual(operator: np.ndarray, state: np.ndarray, value: complex) -> float:
    """``||A psi - value psi||_2``."""
    return float(np.linalg.norm(operator @ state - value * state))


def rayleigh_residual(operator: np.ndarray, state: np.ndarray) -> float:
    """Eigen residual minimized over the eigenvalue (attained at the Rayleigh quotient)."""
    state = state / np.linalg.norm(state)
    Av = operator @ state
    return float(np.linalg.norm(Av - np.vdot(state, Av) * state))


# --------------------------------------------------------------------------
# circuit vs truth table


@dataclass
class OracleComparison:
    """Outcome of running a circuit over every classical input of a truth table.

    ``fidelities`` holds ``|<expected|out>|^2`` per basis input (keyed by its
    bit string) and, for each other input ``x``, the fidelity of the
    superposition ``(|x0> + |x>)/sqrt(2)`` with ``x0`` the all-zero input;
    those catch input-dependent phases that basis inputs alone cannot see.
    """

    fidelities: dict[str, float]
    global_phase: complex
    phase_spread: float
    leakage: float
    equal_up_to_phase: bool

    @property
    def worst_fidelity(self) -> float:
        return min(self.fidelities.values())

    def passed(self, threshold: float = 1 - 1e-9) -> bool:
        return self.worst_fidelity >= threshold and self.equal_up_to_phase

    def to_json_dict(self) -> dict:
        return {
            "fidelities": self.fidelities,
            "worst_fidelity": self.worst_fidelity,
            "global_phase": [self.global_phase.real, self.global_phase.imag],
            "phase_spread": self.phase_spread,
            "leakage": self.leakage,
            "equal_up_to_global_phase": self.equal_up_to_phase,
        }


def compare_with_oracle(circuit: Circuit, data_wires, table: TruthTable, tol: float = 1e-8) -> OracleComparison:
    """Simulate ``circuit`` on all basis inputs of ``data_wires`` (others ``|0>``)."""
    data_wires = list(data_wires)
    if table.arity != len(data_wires):
        raise ValueError(f"truth table has arity {table.arity}, {len(data_wires)} data wires given")
    m = circuit.m

    def index(bits):
        return sum(1 << (m - 1 - w) for w, b in zip(data_wires, bits) if b)

    inputs = list(table.mapping)
    cols = [index(bits) for bits in inputs]
    rows = [index(table(bits)) for bits in inputs]
    psi_in = np.zeros((2**m, len(inputs)), dtype=complex)
    psi_in[cols, range(len(inputs))] = 1
    out = simulate(circuit, psi_in)

    valid = np.zeros(2**m, dtype=bool)
    valid[cols] = True
    leakage = float(np.max(np.linalg.norm(out[~valid], axis=0), initial=0.0))

    expected = np.zeros_like(out)
    expected[rows, range(len(inputs))] = 1
    amps = out[rows, range(len(inputs))]
    ok, c = equal_up_to_global_phase(out, expected, tol)

    labels = ["".join(map(str, b)) for b in inputs]
    fids = {lab: float(abs(a) ** 2) for lab, a in zip(labels, amps)}
    for k in range(1, len(inputs)):
        psi = (out[:, 0] + out[:, k]) / sqrt(2)
        ref = (expected[:, 0] + expected[:, k]) / sqrt(2)
        fids[f"{labels[0]}+{labels[k]}"] = float(abs(np.vdot(ref, psi)) ** 2)
    unit = amps / np.where(np.abs(amps) > 0, np.abs(amps), 1)
    spread = float(np.max(np.abs(unit - c)))
    return OracleComparison(fids, c, spread, leakage, ok)


# --------------------------------------------------------------------------
# Appendix A / B harnesses


def default_encoder_grid(n_theta: int = 9, n_phase: int = 8) -> list[tuple[complex, complex]]:
    """``(cos t, e^{i f} sin t)`` on a grid, always including singlet and triplet."""
    grid = [(1 / sqrt(2), -1 / sqrt(2)), (1 / sqrt(2), 1 / sqrt(2)), (1.0, 0.0)]
    for t in np.linspace(0, np.pi / 2, n_theta):
        for f in np.linspace(0, 2 * np.pi, n_phase, endpoint=False):
            a, b = complex(np.cos(t)), complex(np.exp(1j * f) * np.sin(t))
            grid.append((a, b))
    return grid


@dataclass
class EncoderScanPoint:
    alpha: complex
    beta: complex
    residuals: dict[str, float]

    @property
    def is_singlet(self) -> bool:
        return abs(self.alpha + self.beta) < 1e-12

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    @property
    def min_residual(self) -> float:
        return min(self.residuals.values())


@dataclass
class EncoderScanReport:
    points: list[EncoderScanPoint] = field(default_factory=list)
    singlet_tol: float = 1e-8
    separation_tol: float = 1e-3
    far_from_singlet: float = 0.3

    @property
    def singlet_ok(self) -> bool:
        return all(pt.max_residual < self.singlet_tol for pt in self.points if pt.is_singlet)

    @property
    def others_fail(self) -> bool:
        return all(
            pt.max_residual > self.separation_tol
            for pt in self.points
            if abs(pt.alpha + pt.beta) > self.far_from_singlet
        )

    @property
    def passed(self) -> bool:
        return self.singlet_ok and self.others_fail

    def to_json_dict(self) -> dict:
        singlet = [pt.max_residual for pt in self.points if pt.is_singlet]
        far = [pt.max_residual for pt in self.points if abs(pt.alpha + pt.beta) > self.far_from_singlet]
        return {
            "points": len(self.points),
            "max_residual": max(singlet, default=0.0),
            "min_non_singlet_residual": min(far, default=float("inf")),
            "singlet_ok": self.singlet_ok,
            "others_fail": self.others_fail,
            "passed": self.passed,
        }


def appendix_a_necessity_scan(couplings: CouplingMatrix, grid=None) -> EncoderScanReport:
    """Eigen residual of ``J^2`` on ``|x_L(alpha, beta)>`` for every ``x`` of weight >= 1.

    Per grid point the residual is minimized over the eigenvalue; only the
    singlet encoder (``alpha = -beta``) should give eigenstates.
    """
    if np.any(couplings.J[np.triu_indices(couplings.n_qubits, 1)] == 0):
        raise ValueError("the encoder scan assumes every coupling is nonzero")
    J2, _ = build_j_squared_swap(couplings)
    grid = default_encoder_grid() if grid is None else grid
    xs = [x for x in all_bitstrings(couplings.p) if x.weight() >= 1]
    report = EncoderScanReport()
    for alpha, beta in grid:
        params = GeneralEncoderParams(alpha, beta)
        res = {str(x): rayleigh_residual(J2, encode_bitstring(x, params)) for x in xs}
        report.points.append(EncoderScanPoint(complex(alpha), complex(beta), res))
    return report


def weight_difference_identity(couplings: CouplingMatrix, x, y) -> tuple[float, float]:
    """Both sides of the equal-weight difference identity for ``x``, ``y`` at distance 2.

    Returns ``(lambda_x - lambda_y, rhs)`` where, with ``x_u = 1, x_v = 0``
    and ``y_u = 0, y_v = 1``,
    ``rhs = 2 sum_{n in C0(x), n != v} Jext(v, n) - 2 sum_{n in C0(y), n != u} Jext(u, n)
    + 2 (Jint(v) - Jint(u))``.
    """
    from .encoding import BitString

    x, y = BitString.parse(x), BitString.parse(y)
    diff = [a for a in range(1, len(x) + 1) if x.bits[a - 1] != y.bits[a - 1]]
    if len(diff) != 2 or x.weight() != y.weight():
        raise ValueError("x and y must have equal weight and differ in exactly two places")
    u = next(a for a in diff if x.bits[a - 1] == 1)
    v = next(a for a in diff if x.bits[a - 1] == 0)
    red = validate_pair_structure(couplings)
    rhs = 2 * sum(red.jext(v, n) for n in x.zeros() if n != v)
    rhs -= 2 * sum(red.jext(u, n) for n in y.zeros() if n != u)
    rhs += 2 * (red.jint(v) - red.jint(u))
    lhs = lambda_closed_form(couplings, x) - lambda_closed_form(couplings, y)
    return lhs, float(rhs)


@dataclass
class WeightWitnessReport:
    identity_max_error: float
    witness: dict | None

    def to_json_dict(self) -> dict:
        return {"max_residual": self.identity_max_error, "witness": self.witness}


def appendix_b_witness(couplings: CouplingMatrix, tol: float = 1e-9) -> WeightWitnessReport:
    """Check the difference identity on all equal-weight distance-2 pairs and
    look for two equal-weight strings with different ``lambda``.

    The witness is the pair with the largest ``|lambda_x - lambda_y|``; it is
    ``None`` when every weight class has a single eigenvalue (within ``tol``).
    """
    p = couplings.p
    if p < 3:
        raise ValueError("the weight-class witness needs at least three pairs")
    xs = all_bitstrings(p)
    lam = {str(x): lambda_closed_form(couplings, x) for x in xs}
    worst = 0.0
    best = None
    for x, y in combinations(xs, 2):
        if x.weight() != y.weight():
            continue
        gap = lam[str(x)] - lam[str(y)]
        if best is None or abs(gap) > abs(best["lambda_diff"]):
            best = {"x": str(x), "y": str(y), "lambda_diff": gap}
        if sum(a != b for a, b in zip(x.bits, y.bits)) == 2:
            lhs, rhs = weight_difference_identity(couplings, x, y)
            worst = max(worst, abs(lhs - rhs))
    witness = best if best is not None and abs(best["lambda_diff"]) > tol else None
    return WeightWitnessReport(worst, witness)
