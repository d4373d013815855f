"""Weighted Heisenberg observables on paired physical qubits.

Conventions used throughout the package:

* Logical pairs are 1-based. Pair ``a`` owns physical qubits ``2a - 1`` and
  ``2a`` (also 1-based).
* Physical qubit ``i`` lives on tensor slot ``i - 1`` and qubit 1 is the most
  significant bit of a basis-state label, so ``|10>`` on two qubits is index 2.
* Couplings are angular frequencies (radians per unit time).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

MAX_OPERATOR_QUBITS = 12
STRUCTURE_TOL = 1e-12


@dataclass(frozen=True)
class PairLayout:
    """``p`` logical pairs laid out as ``2p`` physical qubits."""

    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"need at least one pair, got p={self.p}")

    @property
    def physical_count(self) -> int:
        return 2 * self.p

    def pair_of(self, i: int) -> int:
        if not 1 <= i <= self.physical_count:
            raise IndexError(f"physical qubit {i} outside [1, {self.physical_count}]")
        return (i + 1) // 2

    def first(self, a: int) -> int:
        self._check_pair(a)
        return 2 * a - 1

    def second(self, a: int) -> int:
        self._check_pair(a)
        return 2 * a

    def _check_pair(self, a: int) -> None:
        if not 1 <= a <= self.p:
            raise IndexError(f"pair {a} outside [1, {self.p}]")


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric coupling strengths ``J[i, j]`` between ``2p`` physical qubits.

    ``J`` is stored 0-based as a numpy array; use :meth:`coupling` for the
    1-based physical indexing.
    """

    layout: PairLayout
    J: np.ndarray = field(repr=False)

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        n = self.layout.physical_count
        if J.shape != (n, n):
            raise ValueError(f"coupling matrix must be {n}x{n}, got {J.shape}")
        if not np.all(np.isfinite(J)):
            raise ValueError("couplings must be finite")
        if not np.array_equal(J, J.T):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diag(J) != 0):
            raise ValueError("coupling matrix must have a zero diagonal")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def p(self) -> int:
        return self.layout.p

    @property
    def n_qubits(self) -> int:
        return self.layout.physical_count

    def coupling(self, i: int, j: int) -> float:
        return float(self.J[i - 1, j - 1])

    @classmethod
    def from_matrix(cls, J) -> CouplingMatrix:
        J = np.asarray(J, dtype=float)
        if J.ndim != 2 or J.shape[0] % 2:
            raise ValueError("raw coupling matrix must be square with an even side")
        return cls(PairLayout(J.shape[0] // 2), J)

    @classmethod
    def from_pairs(cls, external, internal) -> CouplingMatrix:
        """Build a pair-structured matrix from reduced couplings.

        ``external`` is a ``p x p`` symmetric array (diagonal ignored) holding
        ``Jext(u, v)`` at ``[u-1, v-1]``; ``internal`` holds ``Jint(a)``.
        """
        internal = np.asarray(internal, dtype=float)
        external = np.asarray(external, dtype=float)
        p = internal.shape[0]
        if external.shape != (p, p):
            raise ValueError(f"external couplings must be {p}x{p}")
        if not np.array_equal(external, external.T):
            raise ValueError("external couplings must be symmetric")
        ext = external.copy()
        np.fill_diagonal(ext, 0.0)
        J = np.kron(ext, np.ones((2, 2)))
        for a in range(p):
            J[2 * a, 2 * a + 1] = J[2 * a + 1, 2 * a] = internal[a]
        return cls(PairLayout(p), J)

    @classmethod
    def uniform(cls, p: int, external: float, internal: float) -> CouplingMatrix:
        ext = np.full((p, p), float(external))
        return cls.from_pairs(ext, np.full(p, float(internal)))

    def with_external(self, u: int, v: int, value: float) -> CouplingMatrix:
        """Copy with all four physical couplings between pairs ``u`` and ``v`` set."""
        J = self.J.copy()
        rows = [2 * u - 2, 2 * u - 1]
        cols = [2 * v - 2, 2 * v - 1]
        J[np.ix_(rows, cols)] = value
        J[np.ix_(cols, rows)] = value
        return CouplingMatrix(self.layout, J)

    def to_json_dict(self) -> dict:
        report = validate_pair_structure(self)
        if not report.passed:
            return {"raw": self.J.tolist()}
        external = [
            [u, v, float(report.external[u - 1, v - 1])]
            for u, v in combinations(range(1, self.p + 1), 2)
        ]
        return {"p": self.p, "external": external, "internal": report.internal.tolist()}

    @classmethod
    def from_json_dict(cls, data: dict) -> CouplingMatrix:
        if "raw" in data:
            return cls.from_matrix(data["raw"])
        p = int(data["p"])
        internal = data["internal"]
        if len(internal) != p:
            raise ValueError(f"expected {p} internal couplings, got {len(internal)}")
        ext = np.zeros((p, p))
        seen = set()
        for u, v, value in data["external"]:
            u, v = int(u), int(v)
            if not (1 <= u < v <= p):
                raise ValueError(f"external entry ({u}, {v}) must satisfy 1 <= u < v <= {p}")
            ext[u - 1, v - 1] = ext[v - 1, u - 1] = float(value)
            seen.add((u, v))
        missing = set(combinations(range(1, p + 1), 2)) - seen
        if missing:
            raise ValueError(f"missing external couplings for pairs {sorted(missing)}")
        return cls.from_pairs(ext, internal)


def load_couplings(path) -> CouplingMatrix:
    return CouplingMatrix.from_json_dict(json.loads(Path(path).read_text()))


def save_couplings(couplings: CouplingMatrix, path) -> None:
    Path(path).write_text(json.dumps(couplings.to_json_dict(), indent=2))


@dataclass
class StructureReport:
    passed: bool
    violation: tuple | None = None
    external: np.ndarray | None = None
    internal: np.ndarray | None = None

    def jext(self, u: int, v: int) -> float:
        if u == v:
            raise ValueError("external coupling needs two distinct pairs")
        return float(self.external[u - 1, v - 1])

    def jint(self, a: int) -> float:
        return float(self.internal[a - 1])


def validate_pair_structure(couplings: CouplingMatrix, tol: float = STRUCTURE_TOL) -> StructureReport:
    """Check that the four couplings between every two pairs coincide.

    On failure ``violation`` is ``(u, v, (J11, J12, J21, J22))`` for the first
    offending pairs in lexicographic order.
    """
    J = couplings.J
    p = couplings.p
    external = np.zeros((p, p))
    for u, v in combinations(range(p), 2):
        block = J[2 * u : 2 * u + 2, 2 * v : 2 * v + 2]
        if np.max(np.abs(block - block[0, 0])) > tol:
            values = tuple(float(b) for b in block.ravel())
            return StructureReport(False, violation=(u + 1, v + 1, values))
        external[u, v] = external[v, u] = block[0, 0]
    internal = np.array([J[2 * a, 2 * a + 1] for a in range(p)])
    return StructureReport(True, external=external, internal=internal)


# --------------------------------------------------------------------------
# operators

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _check_size(n: int) -> None:
    if n > MAX_OPERATOR_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense operator cap of {MAX_OPERATOR_QUBITS}")


def pauli_string(ops: dict[int, str], n: int) -> np.ndarray:
    """Dense ``2^n`` matrix of a Pauli string, ``ops`` maps 0-based slots to labels."""
    _check_size(n)
    out = np.ones((1, 1), dtype=complex)
    for slot in range(n):
        out = np.kron(out, _PAULI[ops.get(slot, "I")])
    return out


def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return np.array([bin(i).count("1") for i in idx])


def build_total_spin_z(layout: PairLayout) -> np.ndarray:
    """``J_z = (1/2) sum_i Z_i`` as a dense diagonal matrix."""
    n = layout.physical_count
    _check_size(n)
    return np.diag((n - 2 * _popcounts(n)) / 2.0).astype(complex)


def build_j_squared_pauli(couplings: CouplingMatrix) -> np.ndarray:
    n = couplings.n_qubits
    _check_size(n)
    K = {label: np.zeros((2**n, 2**n), dtype=complex) for label in "XYZ"}
    for i, j in combinations(range(n), 2):
        Jij = couplings.J[i, j]
        if Jij == 0:
            continue
        for label, acc in K.items():
            acc += 0.5 * Jij * pauli_string({i: label, j: label}, n)
    return K["X"] + K["Y"] + K["Z"]


def swap_matrix(i: int, j: int, n: int) -> np.ndarray:
    """Permutation matrix exchanging 0-based slots ``i`` and ``j`` of ``n`` qubits."""
    _check_size(n)
    d = 2**n
    idx = np.arange(d)
    bi = (idx >> (n - 1 - i)) & 1
    bj = (idx >> (n - 1 - j)) & 1
    flip = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
    target = np.where(bi != bj, idx ^ flip, idx)
    out = np.zeros((d, d))
    out[target, idx] = 1.0
    return out


def build_j_squared_swap(couplings: CouplingMatrix) -> tuple[np.ndarray, float]:
    """Return ``(eta*I + sum_{i<j} J_ij SWAP_ij, eta)``."""
    n = couplings.n_qubits
    _check_size(n)
    d = 2**n
    idx = np.arange(d)
    iu = np.triu_indices(n, 1)
    eta = -0.5 * float(np.sum(couplings.J[iu]))
    out = np.zeros((d, d))
    out[idx, idx] = eta
    for i, j in zip(*iu):
        Jij = couplings.J[i, j]
        if Jij == 0:
            continue
        bi = (idx >> (n - 1 - i)) & 1
        bj = (idx >> (n - 1 - j)) & 1
        flip = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
        target = np.where(bi != bj, idx ^ flip, idx)
        np.add.at(out, (target, idx), Jij)
    return out.astype(complex), eta


def build_hamiltonian(couplings: CouplingMatrix, g: float) -> np.ndarray:
    """``H_g = -J^2 + g J_z``."""
    j2, _ = build_j_squared_swap(couplings)
    return -j2 + g * build_total_spin_z(couplings.layout)


def is_hermitian(A: np.ndarray, tol: float = 1e-12) -> bool:
    return A.shape[0] == A.shape[1] and float(np.max(np.abs(A - A.conj().T), initial=0.0)) < tol
