"""Parity, fanout and Mod_q circuits driven by Heisenberg evolution.

Wire layout: logical pair ``a`` (1-based) occupies wires ``2a-2`` (data) and
``2a-1`` (encoding ancilla), so the first ``2z`` wires are exactly the physical
qubits the Hamiltonian acts on.  Target wires follow the pairs.

* parity, ``p`` pairs: ``[in_1, anc_1, ..., in_p, anc_p, target]``.
* fanout: same wires; the parity target is the fanout *control* and the
  ``p`` input wires are the fanout targets.
* Mod_q, ``z = p + q - 1`` pairs: the data wires of pairs ``1..p`` are the
  controls, those of pairs ``p+1..z`` hold the ``q-1`` phase ancillas, then
  ``q-1`` target wires (and one final target for the standard gate).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import sqrt

import numpy as np

from .constraints import (
    ConstraintReport,
    ModqPlan,
    TimingPlan,
    check_modq_couplings,
    check_parity_couplings,
    check_uncompute_constraints,
)
from .encoding import canonical_bitstring, lambda_closed_form
from .engine import Circuit, SpectralPropagator
from .spin_hamiltonian import CouplingMatrix, build_hamiltonian, validate_pair_structure

MAX_MODQ_PAIRS = 6


class ConstraintError(ValueError):
    """Raised when a circuit is requested for couplings that violate its constraints."""

    def __init__(self, report: ConstraintReport):
        super().__init__(f"coupling constraints violated: {report.violations}")
        self.report = report


def v_gate(couplings: CouplingMatrix, g: float, T: float, active: int | None = None) -> np.ndarray:
    """``diag(1, (-1)^s exp(i T c))`` with ``c = 2 Jint(active) - g`` and ``s = (p + 1) mod 2``."""
    red = validate_pair_structure(couplings)
    if not red.passed:
        raise ValueError(f"couplings are not pair structured: {red.violation}")
    p = couplings.p
    active = p if active is None else active
    c = 2 * red.jint(active) - g
    sign = -1 if (p + 1) % 2 else 1
    return np.diag([1.0, sign * np.exp(1j * T * c)]).astype(complex)


@lru_cache(maxsize=4)
def _propagator(J_bytes: bytes, n: int, g: float) -> SpectralPropagator:
    J = np.frombuffer(J_bytes).reshape(n, n)
    return SpectralPropagator(build_hamiltonian(CouplingMatrix.from_matrix(J), g))


def hamiltonian_propagator(couplings: CouplingMatrix, g: float) -> SpectralPropagator:
    """Propagator for ``H_g``; the few most recent (couplings, g) are cached."""
    J = np.ascontiguousarray(couplings.J, dtype=float)
    return _propagator(J.tobytes(), J.shape[0], float(g))


def _encode_all(circuit: Circuit, pairs, name: str = "E") -> None:
    for a in pairs:
        circuit.add(name, 2 * a - 2, 2 * a - 1)


# --------------------------------------------------------------------------
# parity / fanout


@dataclass
class ParityCircuitSpec:
    couplings: CouplingMatrix
    g: float
    plan: TimingPlan
    active: int | None = None

    @property
    def p(self) -> int:
        return self.couplings.p

    def check(self) -> ConstraintReport:
        report = check_parity_couplings(self.couplings, self.plan)
        report.violations += check_uncompute_constraints(self.couplings, self.plan, self.g).violations
        return report


def build_parity_circuit(
    spec: ParityCircuitSpec,
    enforce: bool = True,
    time_offset: float = 0.0,
    field_offset: float = 0.0,
) -> Circuit:
    """Parity of the ``p`` inputs XORed into the target, up to a global phase.

    ``time_offset`` and ``field_offset`` mis-set the physical evolution (both
    evolutions, and the field of ``H_g``) while the single-qubit gates keep
    their nominal values; they exist for robustness sweeps.  With
    ``enforce=False`` constraint violations are tolerated.
    """
    if enforce:
        report = spec.check()
        if not report.passed:
            raise ConstraintError(report)
    p = spec.p
    active = p if spec.active is None else spec.active
    if not 1 <= active <= p:
        raise ValueError(f"active pair {active} outside [1, {p}]")
    a_in, a_anc = 2 * active - 2, 2 * active - 1
    target = 2 * p
    physical = list(range(2 * p))
    H = hamiltonian_propagator(spec.couplings, spec.g + field_offset)
    V = v_gate(spec.couplings, spec.g, spec.plan.T, active)

    c = Circuit(
        2 * p + 1,
        layout={
            "inputs": list(range(0, 2 * p, 2)),
            "ancillas": list(range(1, 2 * p, 2)),
            "targets": [target],
            "physical": physical,
        },
    )
    c.add("H", a_in)
    _encode_all(c, range(1, p + 1))
    c.add("evolve", *physical, t=spec.plan.T + time_offset, hamiltonian=H, label="H_g")
    c.add("E_dagger", a_in, a_anc)
    c.add("V", a_in, matrix=V)
    c.add("H", a_in)
    c.add("CNOT", a_in, target)
    c.add("H", a_in)
    c.add("V_dagger", a_in, matrix=V)
    c.add("E", a_in, a_anc)
    c.add("evolve", *physical, t=spec.plan.T_prime + time_offset, hamiltonian=H, label="H_g")
    _encode_all(c, range(1, p + 1), "E_dagger")
    c.add("H", a_in)
    return c


def build_fanout_circuit(spec: ParityCircuitSpec, enforce: bool = True, **offsets) -> Circuit:
    """Parity circuit conjugated by Hadamards on every input wire and the target.

    Acts as fanout with the parity target wire (``2p``) as control and the
    ``p`` input wires as targets: ``|x_1..x_p, c> -> |x_1^c .. x_p^c, c>``.
    """
    parity = build_parity_circuit(spec, enforce=enforce, **offsets)
    bank = parity.layout["inputs"] + parity.layout["targets"]
    c = Circuit(parity.m, layout={
        "targets": list(parity.layout["inputs"]),
        "ancillas": list(parity.layout["ancillas"]),
        "control": list(parity.layout["targets"]),
        "physical": list(parity.layout["physical"]),
    })
    for w in bank:
        c.add("H", w)
    c.extend(parity)
    for w in bank:
        c.add("H", w)
    return c


# --------------------------------------------------------------------------
# Mod_q


@dataclass
class ModqCircuitSpec:
    p: int
    couplings: CouplingMatrix
    g: float
    plan: ModqPlan

    @property
    def q(self) -> int:
        return self.plan.q

    @property
    def z(self) -> int:
        return self.p + self.plan.q - 1

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("need at least one control")
        if self.couplings.p != self.z:
            raise ValueError(f"couplings cover {self.couplings.p} pairs, expected z = p + q - 1 = {self.z}")
        if self.z > MAX_MODQ_PAIRS:
            raise ValueError(f"z = {self.z} pairs exceeds the desk-scale limit of {MAX_MODQ_PAIRS}")

    def check(self) -> ConstraintReport:
        return check_modq_couplings(self.couplings, self.plan, self.g)


def ancilla_amplitudes(q: int) -> np.ndarray:
    return np.full(q, 1 / sqrt(q))


def ancilla_labels(q: int) -> list[int]:
    """Basis indices of ``|A_j> = |1^j 0^(q-1-j)>`` on ``q - 1`` qubits."""
    n = q - 1
    return [((1 << j) - 1) << (n - j) for j in range(q)]


def prepare_ancilla_state(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(|A>, P)`` with ``|A> = sum_j h_j |A_j>`` and ``P|0..0> = |A>``.

    ``P`` is the Householder reflection exchanging ``|0..0>`` and ``|A>``.
    """
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")
    d = 2 ** (q - 1)
    state = np.zeros(d, dtype=complex)
    state[ancilla_labels(q)] = ancilla_amplitudes(q)
    v = -state
    v[0] += 1
    P = np.eye(d, dtype=complex) - 2 * np.outer(v, v.conj()) / np.vdot(v, v)
    return state, P


def compute_phi_states(
    couplings: CouplingMatrix, g: float, plan: ModqPlan, p: int, weights=None
) -> dict[int, np.ndarray]:
    """Decoded ancilla states ``Phi_u`` after the forward evolution.

    ``u`` ranges over ``weights`` (default ``0..p``) and uses the control
    string ``1^u 0^(p-u)``.  Eigenvalues come from the closed form on all
    ``z`` pairs.
    """
    q, T = plan.q, plan.T
    z = p + q - 1
    if couplings.p != z:
        raise ValueError(f"couplings cover {couplings.p} pairs, expected {z}")
    h = ancilla_amplitudes(q)
    labels = ancilla_labels(q)
    weights = range(p + 1) if weights is None else weights
    out = {}
    for u in weights:
        x = canonical_bitstring(u, p).bits
        phi = np.zeros(2 ** (q - 1), dtype=complex)
        for j in range(q):
            xa = x + canonical_bitstring(j, q - 1).bits
            lam = lambda_closed_form(couplings, xa)
            phi[labels[j]] = h[j] * np.exp(-1j * T * (-lam + g * (z - u - j)))
        out[u] = phi / np.linalg.norm(phi)
    return out


def residue_representatives(phis: dict[int, np.ndarray], q: int) -> list[np.ndarray | None]:
    """One ``Phi`` per residue ``u mod q`` (the smallest ``u``), ``None`` if unreachable."""
    reps: list[np.ndarray | None] = [None] * q
    for u in sorted(phis):
        if reps[u % q] is None:
            reps[u % q] = phis[u]
    return reps


def build_r_unitary(phis, q: int | None = None, tol: float = 1e-8) -> np.ndarray:
    """Unitary mapping the phase-fixed ``phi_j`` to ``|A_j>``.

    ``phis[j]`` is the state for residue ``j`` or ``None``; missing residues
    are filled by orthonormal completion inside ``span{|A_j>}``.  Outside
    that span ``R`` is the identity.
    """
    phis = list(phis)
    q = len(phis) if q is None else q
    d = 2 ** (q - 1)
    labels = ancilla_labels(q)
    A = np.zeros((d, q), dtype=complex)
    A[labels, range(q)] = 1
    span = A @ A.conj().T

    fixed = []
    for j, phi in enumerate(phis):
        if phi is None:
            fixed.append(None)
            continue
        phi = np.asarray(phi, dtype=complex)
        phi = phi / np.linalg.norm(phi)
        if np.linalg.norm(phi - span @ phi) > tol:
            raise ValueError(f"phi_{j} leaves span{{|A_j>}}")
        anchor = phi[labels[0]]
        if abs(anchor) < tol:
            raise ValueError(f"phi_{j} has no |A_0> component to fix its phase")
        fixed.append(phi * abs(anchor) / anchor)
    given = [(j, f) for j, f in enumerate(fixed) if f is not None]
    for a, (i, fi) in enumerate(given):
        for j, fj in given[a + 1 :]:
            if abs(np.vdot(fi, fj)) > tol:
                raise ValueError(f"phi_{i} and phi_{j} are not orthogonal (overlap {abs(np.vdot(fi, fj)):.3g})")

    basis = [f for f in fixed if f is not None]
    for j in range(q):
        if fixed[j] is not None:
            continue
        # Gram-Schmidt the standard vectors of the span against what we have.
        for k in range(q):
            cand = A[:, k].copy()
            for b in basis:
                cand -= np.vdot(b, cand) * b
            if np.linalg.norm(cand) > 1e-6:
                fixed[j] = cand / np.linalg.norm(cand)
                basis.append(fixed[j])
                break
    Phi = np.stack(fixed, axis=1)
    return A @ Phi.conj().T + (np.eye(d) - Phi @ Phi.conj().T)


def modq_r_unitary(spec: ModqCircuitSpec) -> np.ndarray:
    phis = compute_phi_states(spec.couplings, spec.g, spec.plan, spec.p)
    return build_r_unitary(residue_representatives(phis, spec.q), spec.q)


def _modq_wires(spec: ModqCircuitSpec) -> dict[str, list[int]]:
    z, p, q = spec.z, spec.p, spec.q
    return {
        "controls": [2 * a - 2 for a in range(1, p + 1)],
        "phase_ancillas": [2 * a - 2 for a in range(p + 1, z + 1)],
        "ancillas": [2 * a - 1 for a in range(1, z + 1)],
        "targets": list(range(2 * z, 2 * z + q - 1)),
        "physical": list(range(2 * z)),
    }


def _generalized_body(c: Circuit, spec: ModqCircuitSpec, H: SpectralPropagator, R, prep, wires, time_offset) -> None:
    pairs = range(1, spec.z + 1)
    anc = wires["phase_ancillas"]
    c.add("PREP", *anc, matrix=prep, label="ancilla_state")
    _encode_all(c, pairs)
    c.add("evolve", *wires["physical"], t=spec.plan.T + time_offset, hamiltonian=H, label="H_g")
    _encode_all(c, pairs, "E_dagger")
    c.add("R", *anc, matrix=R)
    for a, t in zip(anc, wires["targets"]):
        c.add("CNOT", a, t)
    c.add("R_dagger", *anc, matrix=R)
    _encode_all(c, pairs)
    c.add("evolve", *wires["physical"], t=spec.plan.T_prime + time_offset, hamiltonian=H, label="H_g")
    _encode_all(c, pairs, "E_dagger")
    c.add("PREP_dagger", *anc, matrix=prep, label="ancilla_state")


def _modq_parts(spec: ModqCircuitSpec, enforce: bool, field_offset: float):
    if enforce:
        report = spec.check()
        if not report.passed:
            raise ConstraintError(report)
    H = hamiltonian_propagator(spec.couplings, spec.g + field_offset)
    _, prep = prepare_ancilla_state(spec.q)
    return H, modq_r_unitary(spec), prep


def build_generalized_modq_circuit(
    spec: ModqCircuitSpec, enforce: bool = True, time_offset: float = 0.0, field_offset: float = 0.0
) -> Circuit:
    """Flips targets ``t_1..t_i`` with ``i = wt(x) mod q``.

    The phase ancillas start and end in ``|0..0>``: the circuit prepares the
    uniform ancilla state first and un-prepares it last.
    """
    H, R, prep = _modq_parts(spec, enforce, field_offset)
    wires = _modq_wires(spec)
    c = Circuit(2 * spec.z + spec.q - 1, layout=wires)
    _generalized_body(c, spec, H, R, prep, wires, time_offset)
    return c


def build_standard_modq_circuit(
    spec: ModqCircuitSpec, enforce: bool = True, time_offset: float = 0.0, field_offset: float = 0.0
) -> Circuit:
    """Flips one final target iff ``wt(x) mod q != 0``; the ``q - 1`` work targets return to ``|0>``."""
    H, R, prep = _modq_parts(spec, enforce, field_offset)
    wires = _modq_wires(spec)
    final = 2 * spec.z + spec.q - 1
    layout = dict(wires)
    layout["ancillas"] = wires["ancillas"] + wires["targets"]
    layout["work_targets"] = wires["targets"]
    layout["targets"] = [final]
    c = Circuit(final + 1, layout=layout)
    _generalized_body(c, spec, H, R, prep, wires, time_offset)
    c.add("CNOT", wires["targets"][0], final)
    _generalized_body(c, spec, H, R, prep, wires, time_offset)
    return c


def ghz_input(circuit: Circuit) -> np.ndarray:
    """Fanout input with the control in ``(|0> + |1>)/sqrt(2)`` and every other wire ``|0>``."""
    (control,) = circuit.layout["control"]
    psi = np.zeros(2**circuit.m, dtype=complex)
    psi[0] = psi[1 << (circuit.m - 1 - control)] = 1 / sqrt(2)
    return psi


def ghz_target(circuit: Circuit) -> np.ndarray:
    """``(|0..0> + |1..1>)/sqrt(2)`` on the fanout wires, encoding ancillas ``|0>``."""
    wires = circuit.layout["targets"] + circuit.layout["control"]
    ones = sum(1 << (circuit.m - 1 - w) for w in wires)
    psi = np.zeros(2**circuit.m, dtype=complex)
    psi[0] = psi[ones] = 1 / sqrt(2)
    return psi

