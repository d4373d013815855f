"""Dense statevector simulation with exact Hamiltonian evolution.

Wires are 0-based tensor slots; wire 0 is the most significant bit of a basis
label.  States are plain complex numpy arrays of shape ``(2**m,)``, or
``(2**m, n)`` for a batch of ``n`` states propagated together.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .encoding import eigen_data, encoder_unitary
from .spin_hamiltonian import MAX_OPERATOR_QUBITS

_S = 1 / sqrt(2)

FIXED_GATES = {
    "H": np.array([[_S, _S], [_S, -_S]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
    "E": encoder_unitary(),
    "E_dagger": encoder_unitary().conj().T,
}
# Gates carrying their own matrix; the *_dagger variants store the undaggered one.
MATRIX_GATES = {"V", "R", "PREP", "Unitary"}
DAGGER_OF = {"V_dagger": "V", "R_dagger": "R", "PREP_dagger": "PREP"}
INVERSE_NAME = {"E": "E_dagger", "E_dagger": "E", **DAGGER_OF, **{v: k for k, v in DAGGER_OF.items()}}


def is_unitary(U: np.ndarray, tol: float = 1e-10) -> bool:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))) < tol


class SpectralPropagator:
    """``exp(-i t H)`` from a cached Hermitian eigendecomposition.

    When ``H`` conserves the number of 1-bits (every Hamiltonian built from
    Heisenberg couplings and a ``Z`` field does), each magnetization sector is
    diagonalized on its own.  The result is the same decomposition, obtained
    on blocks of at most ``C(n, n/2)`` rows.
    """

    def __init__(self, H: np.ndarray, tol: float = 1e-10):
        H = np.asarray(H)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("Hamiltonian must be a square matrix")
        d = H.shape[0]
        if d > 2**MAX_OPERATOR_QUBITS:
            raise ValueError(f"dimension {d} exceeds the cap of {2**MAX_OPERATOR_QUBITS}")
        scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
        if float(np.max(np.abs(H - H.conj().T), initial=0.0)) > tol * scale:
            raise ValueError("Hamiltonian is not Hermitian")
        if np.iscomplexobj(H) and not np.any(H.imag):
            H = H.real
        self.dim = d
        self.blocks = [(idx, *np.linalg.eigh(H[np.ix_(idx, idx)])) for idx in self._sectors(H)]

    @staticmethod
    def _sectors(H: np.ndarray) -> list[np.ndarray]:
        d = H.shape[0]
        n = d.bit_length() - 1
        if d != 2**n or n == 0:
            return [np.arange(d)]
        weight = np.array([bin(i).count("1") for i in range(d)])
        rows, cols = np.nonzero(H)
        if np.any(weight[rows] != weight[cols]):
            return [np.arange(d)]
        return [np.flatnonzero(weight == w) for w in range(n + 1)]

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.concatenate([w for _, w, _ in self.blocks]))

    def apply(self, states: np.ndarray, t: float) -> np.ndarray:
        states = np.asarray(states, dtype=complex)
        if states.shape[0] != self.dim:
            raise ValueError(f"state dimension {states.shape[0]} != {self.dim}")
        out = np.empty_like(states)
        for idx, w, V in self.blocks:
            phases = np.exp(-1j * t * w)
            coeff = V.conj().T @ states[idx]
            coeff = phases[:, None] * coeff if coeff.ndim == 2 else phases * coeff
            out[idx] = V @ coeff
        return out

    def unitary(self, t: float) -> np.ndarray:
        return self.apply(np.eye(self.dim, dtype=complex), t)


_propagators: dict[int, tuple[weakref.ref, SpectralPropagator]] = {}


def propagator_for(H) -> SpectralPropagator:
    """Return a (cached) propagator for ``H``; the cache lives as long as ``H`` does."""
    if isinstance(H, SpectralPropagator):
        return H
    key = id(H)
    hit = _propagators.get(key)
    if hit is not None and hit[0]() is H:
        return hit[1]
    prop = SpectralPropagator(H)
    try:
        ref = weakref.ref(H, lambda _, key=key: _propagators.pop(key, None))
    except TypeError:
        return prop
    _propagators[key] = (ref, prop)
    return prop


def evolve_exact(state: np.ndarray, H, t: float) -> np.ndarray:
    """``exp(-i t H) state`` via spectral decomposition."""
    return propagator_for(H).apply(state, t)


# --------------------------------------------------------------------------
# gates and circuits


@dataclass
class Gate:
    name: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = None
    t: float | None = None
    hamiltonian: SpectralPropagator | None = None
    label: str | None = None

    def __post_init__(self):
        self.targets = tuple(int(q) for q in self.targets)
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{self.name}: repeated target in {self.targets}")
        if self.name == "evolve":
            if self.hamiltonian is None or self.t is None:
                raise ValueError("evolve gate needs a Hamiltonian and a time")
            self.hamiltonian = propagator_for(self.hamiltonian)
            if self.hamiltonian.dim != 2 ** len(self.targets):
                raise ValueError("Hamiltonian dimension does not match the evolve targets")
            return
        U = self.unitary()
        if U.shape != (2 ** len(self.targets),) * 2:
            raise ValueError(f"{self.name}: matrix of shape {U.shape} on {len(self.targets)} targets")

    def unitary(self) -> np.ndarray:
        if self.name in FIXED_GATES:
            return FIXED_GATES[self.name]
        if self.name in MATRIX_GATES | set(DAGGER_OF):
            if self.matrix is None:
                raise ValueError(f"{self.name} gate needs a matrix")
            M = np.asarray(self.matrix, dtype=complex)
            return M.conj().T if self.name in DAGGER_OF else M
        if self.name == "evolve":
            return self.hamiltonian.unitary(self.t)
        raise ValueError(f"unknown gate {self.name!r}")

    def inverse(self) -> Gate:
        if self.name == "evolve":
            return Gate("evolve", self.targets, t=-self.t, hamiltonian=self.hamiltonian, label=self.label)
        if self.name in ("H", "X", "Z", "CNOT", "SWAP"):
            return Gate(self.name, self.targets)
        if self.name == "Unitary":
            return Gate("Unitary", self.targets, matrix=np.asarray(self.matrix).conj().T, label=self.label)
        return Gate(INVERSE_NAME[self.name], self.targets, matrix=self.matrix, label=self.label)

    def to_json_dict(self) -> dict:
        out = {"gate": self.name, "targets": list(self.targets)}
        if self.name == "evolve":
            out.update(t=float(self.t), hamiltonian=self.label or "H")
        elif self.matrix is not None:
            M = np.asarray(self.matrix, dtype=complex)
            out["matrix"] = np.stack([M.real, M.imag], axis=-1).tolist()
        if self.label and self.name != "evolve":
            out["label"] = self.label
        return out

    @classmethod
    def from_json_dict(cls, data: dict, hamiltonians: dict | None = None) -> Gate:
        name = data["gate"]
        if name == "evolve":
            label = data.get("hamiltonian", "H")
            if not hamiltonians or label not in hamiltonians:
                raise KeyError(f"no Hamiltonian named {label!r} supplied")
            return cls(name, data["targets"], t=data["t"], hamiltonian=hamiltonians[label], label=label)
        matrix = None
        if "matrix" in data:
            arr = np.asarray(data["matrix"], dtype=float)
            matrix = arr[..., 0] + 1j * arr[..., 1]
        return cls(name, data["targets"], matrix=matrix, label=data.get("label"))


@dataclass
class Circuit:
    """Ordered gate list on ``m`` wires.

    ``layout`` names wire roles (e.g. ``inputs``, ``ancillas``, ``targets``);
    every wire listed under ``ancillas`` starts in ``|0>``.
    """

    m: int
    gates: list[Gate] = field(default_factory=list)
    layout: dict[str, list[int]] = field(default_factory=dict)

    def add(self, name: str, *targets: int, **kwargs) -> Circuit:
        gate = Gate(name, targets, **kwargs)
        self._check(gate)
        self.gates.append(gate)
        return self

    def append(self, gate: Gate) -> Circuit:
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, other: Circuit) -> Circuit:
        for gate in other.gates:
            self.append(gate)
        return self

    def _check(self, gate: Gate) -> None:
        bad = [q for q in gate.targets if not 0 <= q < self.m]
        if bad:
            raise IndexError(f"{gate.name}: wires {bad} outside [0, {self.m})")

    def inverse(self) -> Circuit:
        return Circuit(self.m, [g.inverse() for g in reversed(self.gates)], dict(self.layout))

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "layout": {k: list(v) for k, v in self.layout.items()},
            "gates": [g.to_json_dict() for g in self.gates],
        }

    @classmethod
    def from_json_dict(cls, data: dict, hamiltonians: dict | None = None) -> Circuit:
        circuit = cls(int(data["m"]), layout={k: list(v) for k, v in data.get("layout", {}).items()})
        for g in data["gates"]:
            circuit.append(Gate.from_json_dict(g, hamiltonians))
        return circuit


def _qubits_of(states: np.ndarray) -> int:
    d = states.shape[0]
    m = d.bit_length() - 1
    if d != 2**m:
        raise ValueError(f"state length {d} is not a power of two")
    return m


def apply_matrix(states: np.ndarray, U: np.ndarray, targets, m: int | None = None) -> np.ndarray:
    """Apply ``U`` to ``targets`` (in the order given, first = most significant)."""
    states = np.asarray(states, dtype=complex)
    m = _qubits_of(states) if m is None else m
    if states.shape[0] != 2**m:
        raise ValueError(f"state of length {states.shape[0]} is not an {m}-qubit state")
    targets = list(targets)
    k = len(targets)
    if U.shape != (2**k, 2**k):
        raise ValueError(f"matrix of shape {U.shape} cannot act on {k} qubits")
    if any(not 0 <= q < m for q in targets) or len(set(targets)) != k:
        raise IndexError(f"invalid targets {targets} for {m} qubits")
    batch = states.shape[1:]
    psi = states.reshape((2,) * m + batch)
    rest = [q for q in range(m) if q not in targets]
    order = targets + rest + list(range(m, m + len(batch)))
    psi = psi.transpose(order).reshape(2**k, -1)
    psi = (U @ psi).reshape((2,) * m + batch)
    return psi.transpose(np.argsort(order)).reshape(states.shape)


def apply_gate(states: np.ndarray, gate: Gate) -> np.ndarray:
    if gate.name == "evolve":
        m = _qubits_of(np.asarray(states))
        targets = list(gate.targets)
        if any(not 0 <= q < m for q in targets):
            raise IndexError(f"invalid targets {targets} for {m} qubits")
        if targets == list(range(len(targets))):
            # Leading wires: evolve the reshaped block directly.
            states = np.asarray(states, dtype=complex)
            block = states.reshape(2 ** len(targets), -1)
            return gate.hamiltonian.apply(block, gate.t).reshape(states.shape)
        return apply_matrix(states, gate.unitary(), targets, m)
    return apply_matrix(states, gate.unitary(), gate.targets)


def embed_on_subset(U: np.ndarray, targets, m: int) -> np.ndarray:
    """Full ``2**m`` matrix acting as ``U`` on ``targets`` and identity elsewhere."""
    if m > MAX_OPERATOR_QUBITS:
        raise ValueError(f"{m} qubits exceeds the dense operator cap")
    return apply_matrix(np.eye(2**m, dtype=complex), np.asarray(U, dtype=complex), targets, m)


def simulate(circuit: Circuit, states: np.ndarray) -> np.ndarray:
    states = np.asarray(states, dtype=complex)
    if states.shape[0] != 2**circuit.m:
        raise ValueError(f"state dimension {states.shape[0]} != 2**{circuit.m}")
    for gate in circuit.gates:
        states = apply_gate(states, gate)
    return states


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    if circuit.m > MAX_OPERATOR_QUBITS:
        raise ValueError(f"{circuit.m} wires exceeds the dense unitary cap of {MAX_OPERATOR_QUBITS}")
    return simulate(circuit, np.eye(2**circuit.m, dtype=complex))


def basis_state(index: int, m: int) -> np.ndarray:
    psi = np.zeros(2**m, dtype=complex)
    psi[index] = 1
    return psi


def label_to_index(bits: dict[int, int], m: int) -> int:
    """Basis index for the wire assignment ``bits`` (other wires 0)."""
    index = 0
    for wire, b in bits.items():
        if b:
            index |= 1 << (m - 1 - wire)
    return index


def equal_up_to_global_phase(A, B, tol: float = 1e-8) -> tuple[bool, complex]:
    """Whether ``A = c B`` for a unit-modulus ``c`` (fitted from B's largest entry)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    flat = np.argmax(np.abs(B))
    b = B.flat[flat]
    if abs(b) == 0:
        return bool(np.max(np.abs(A), initial=0.0) < tol), 1.0 + 0j
    c = A.flat[flat] / b
    c = c / abs(c) if abs(c) > 0 else 1.0 + 0j
    return bool(np.max(np.abs(A - c * B)) < tol), complex(c)


def evolve_analytic(x, couplings, g: float, t: float) -> complex:
    """Scalar ``exp(-i t e)`` with ``e`` the closed-form ``H_g`` eigenvalue of ``|x_L>``.

    ``e = delta_x - eta``: the closed-form ``delta_x`` plus the constant
    offset carried by ``J^2``, so the scalar matches the dense evolution
    exactly rather than up to a global phase.
    """
    return complex(np.exp(-1j * t * eigen_data(couplings, g, x).h_eigenvalue))


def fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    return float(abs(np.vdot(psi, phi)) ** 2)
