"""Pair encoder, encoded basis states and closed-form eigenvalues.

The closed form for ``lambda_x`` is the eigenvalue of ``sum_{i<j} J_ij SWAP_ij``
on ``|x_L>``; the full ``J^2`` adds the constant ``eta`` (see
:func:`spinfanout.spin_hamiltonian.build_j_squared_swap`), so
``J^2 |x_L> = (lambda_x + eta) |x_L>``.  ``eta`` never depends on ``x`` and
only contributes a global phase to any evolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import sqrt

import numpy as np

from .spin_hamiltonian import CouplingMatrix, StructureReport, validate_pair_structure

SQRT1_2 = 1 / sqrt(2)


@dataclass(frozen=True)
class BitString:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"bits must be 0/1, got {self.bits}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text) -> BitString:
        if isinstance(text, BitString):
            return text
        if isinstance(text, str):
            if not text or set(text) - {"0", "1"}:
                raise ValueError(f"not a bit string: {text!r}")
            return cls(tuple(int(c) for c in text))
        return cls(tuple(text))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def weight(self) -> int:
        return sum(self.bits)

    def ones(self) -> list[int]:
        return [a for a, b in enumerate(self.bits, start=1) if b]

    def zeros(self) -> list[int]:
        return [a for a, b in enumerate(self.bits, start=1) if not b]

    def with_bit(self, a: int, value: int) -> BitString:
        bits = list(self.bits)
        bits[a - 1] = value
        return BitString(tuple(bits))


def all_bitstrings(p: int) -> list[BitString]:
    return [BitString(tuple((i >> (p - 1 - k)) & 1 for k in range(p))) for i in range(2**p)]


def canonical_bitstring(weight: int, p: int) -> BitString:
    """``1^w 0^(p-w)``, the representative used for weight-indexed tables."""
    if not 0 <= weight <= p:
        raise ValueError(f"weight {weight} outside [0, {p}]")
    return BitString((1,) * weight + (0,) * (p - weight))


# --------------------------------------------------------------------------
# encoders

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
# Hadamard on qubit 1 controlled by qubit 2.
_CH_21 = np.array(
    [
        [1, 0, 0, 0],
        [0, SQRT1_2, 0, SQRT1_2],
        [0, 0, 1, 0],
        [0, SQRT1_2, 0, -SQRT1_2],
    ],
    dtype=complex,
)


def encoder_unitary() -> np.ndarray:
    """Two-qubit encoder: CNOT(1->2), then CH(2->1), then CNOT(1->2)."""
    return _CNOT @ _CH_21 @ _CNOT


@dataclass(frozen=True)
class GeneralEncoderParams:
    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm}, expected 1")


SINGLET = GeneralEncoderParams(SQRT1_2, -SQRT1_2)


def general_encoder(params: GeneralEncoderParams) -> np.ndarray:
    """Encoder with ``|10> -> alpha|01> + beta|10>``.

    Columns for ``|01>`` and ``|11>`` are completed as
    ``conj(beta)|01> - conj(alpha)|10>`` and ``|11>``.
    """
    a, b = complex(params.alpha), complex(params.beta)
    E = np.zeros((4, 4), dtype=complex)
    E[0, 0] = 1
    E[1, 2], E[2, 2] = a, b
    E[1, 1], E[2, 1] = np.conj(b), -np.conj(a)
    E[3, 3] = 1
    return E


def pair_states(params: GeneralEncoderParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(|psi_0>, |psi_1>)`` produced by the encoder from ``|00>`` and ``|10>``."""
    E = encoder_unitary() if params is None else general_encoder(params)
    return E[:, 0].copy(), E[:, 2].copy()


def encode_bitstring(x, params: GeneralEncoderParams | None = None) -> np.ndarray:
    x = BitString.parse(x)
    psi0, psi1 = pair_states(params)
    state = np.ones(1, dtype=complex)
    for b in x.bits:
        state = np.kron(state, psi1 if b else psi0)
    return state


# --------------------------------------------------------------------------
# closed forms


def _reduced(couplings: CouplingMatrix) -> StructureReport:
    report = validate_pair_structure(couplings)
    if not report.passed:
        u, v, values = report.violation
        raise ValueError(f"couplings are not pair structured: pairs ({u}, {v}) have {values}")
    return report


def lambda_closed_form(couplings: CouplingMatrix, x) -> float:
    x = BitString.parse(x)
    if len(x) != couplings.p:
        raise ValueError(f"bit string has length {len(x)}, couplings have {couplings.p} pairs")
    red = _reduced(couplings)
    ones, zeros = x.ones(), x.zeros()
    total = 2 * sum(red.jext(r, t) for r in ones for t in zeros)
    total += 2 * sum(red.jext(r, s) for r, s in combinations(ones, 2))
    total += 4 * sum(red.jext(m, n) for m, n in combinations(zeros, 2))
    total += sum(red.jint(m) for m in zeros) - sum(red.jint(r) for r in ones)
    return float(total)


@dataclass(frozen=True)
class EigenData:
    """Closed-form spectral data of ``|x_L>``.

    ``lambda_x``/``delta_x`` follow the closed form (no ``eta``);
    ``j2_eigenvalue``/``h_eigenvalue`` are the actual eigenvalues of ``J^2``
    and ``H_g``.
    """

    lambda_x: float
    delta_x: float
    c_v: float
    c_gp: float
    c_x: float
    eta: float

    @property
    def j2_eigenvalue(self) -> float:
        return self.lambda_x + self.eta

    @property
    def h_eigenvalue(self) -> float:
        return self.delta_x - self.eta


def eta_of(couplings: CouplingMatrix) -> float:
    return -0.5 * float(np.sum(np.triu(couplings.J, 1)))


def eigen_data(couplings: CouplingMatrix, g: float, x, active: int | None = None) -> EigenData:
    """Closed-form eigenvalues and phase scalars for ``x``.

    ``c_v`` and ``c_gp`` refer to the active pair (default: the last pair);
    ``c_v`` is evaluated on ``x`` with the active bit forced to 1.
    """
    x = BitString.parse(x)
    p = couplings.p
    active = p if active is None else active
    red = _reduced(couplings)
    lam = lambda_closed_form(couplings, x)
    v = x.with_bit(active, 1)
    c_v = 2 * sum(red.jext(active, t) for t in v.zeros())
    c_gp = 2 * red.jint(active) - g
    c_x = sum(red.jint(m) for m in x.zeros()) - sum(red.jint(r) for r in x.ones())
    return EigenData(
        lambda_x=lam,
        delta_x=-lam + g * (p - x.weight()),
        c_v=float(c_v),
        c_gp=float(c_gp),
        c_x=float(c_x),
        eta=eta_of(couplings),
    )
