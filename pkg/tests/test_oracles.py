from __future__ import annotations

from itertools import product
from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinfanout.constraints import TimingPlan, cfg_a, cfg_b, sample_couplings
from spinfanout.encoding import GeneralEncoderParams, encode_bitstring, lambda_closed_form
from spinfanout.engine import Circuit
from spinfanout.oracles import (
    TruthTable,
    appendix_a_necessity_scan,
    appendix_b_witness,
    compare_with_oracle,
    default_encoder_grid,
    eigen_residual,
    fanout_oracle,
    modq_oracle,
    parity_oracle,
    rayleigh_residual,
    weight_difference_identity,
)
from spinfanout.spin_hamiltonian import CouplingMatrix, build_j_squared_swap

from conftest import random_pair_couplings


def hadamard_bank(n):
    H = np.array([[1, 1], [1, -1]]) / sqrt(2)
    out = np.eye(1)
    for _ in range(n):
        out = np.kron(out, H)
    return out


def test_parity_oracle_examples():
    assert parity_oracle(2)((1, 0, 0)) == (1, 0, 1)
    assert parity_oracle(2)((0, 0, 0)) == (0, 0, 0)
    assert parity_oracle(3)((1, 1, 1, 1)) == (1, 1, 1, 0)


def test_fanout_oracle_examples():
    assert fanout_oracle(2)((1, 0, 1)) == (0, 1, 1)
    for x in product((0, 1), repeat=3):
        assert fanout_oracle(3)(x + (0,)) == x + (0,)


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_fanout_is_hadamard_conjugated_parity(p):
    Hb = hadamard_bank(p + 1)
    diff = fanout_oracle(p).unitary() - Hb @ parity_oracle(p).unitary() @ Hb
    assert np.max(np.abs(diff)) < 1e-12


def test_modq_oracle_examples():
    assert modq_oracle(2, 3)((1, 1, 0, 0)) == (1, 1, 1, 1)
    assert modq_oracle(3, 3, generalized=False)((1, 1, 1, 0)) == (1, 1, 1, 0)
    assert modq_oracle(3, 3, generalized=False)((1, 1, 0, 0)) == (1, 1, 0, 1)
    assert modq_oracle(3, 3)((1, 0, 0, 0, 1)) == (1, 0, 0, 1, 1)
    with pytest.raises(ValueError):
        modq_oracle(2, 1)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_modq_q2_is_parity(p):
    assert modq_oracle(p, 2).mapping == parity_oracle(p).mapping
    assert modq_oracle(p, 2, generalized=False).mapping == parity_oracle(p).mapping


@pytest.mark.parametrize(
    "table",
    [parity_oracle(3), fanout_oracle(3), modq_oracle(3, 3), modq_oracle(2, 4), modq_oracle(2, 3, generalized=False)],
)
def test_involutions(table):
    assert table.is_bijection()
    square = table.compose(table)
    assert all(square(x) == x for x in square.mapping)
    U = table.unitary()
    assert np.array_equal(U @ U, np.eye(U.shape[0]))


def test_eigen_residual_identity():
    psi = np.array([0.6, 0.8])
    assert eigen_residual(np.eye(2), psi, 1) == 0


def test_eigen_residual_cfg_a():
    J, _, _ = cfg_a()
    J2, eta = build_j_squared_swap(J)
    for x in ("000", "101", "011"):
        lam = lambda_closed_form(J, x) + eta
        assert eigen_residual(J2, encode_bitstring(x), lam) < 1e-10
        triplet = encode_bitstring(x, GeneralEncoderParams(1 / sqrt(2), 1 / sqrt(2)))
        if x != "000":
            assert eigen_residual(J2, triplet, lam) > 0.1


def test_rayleigh_residual_lower_bounds(rng):
    J = random_pair_couplings(rng, 2)
    J2, _ = build_j_squared_swap(J)
    psi = encode_bitstring("10", GeneralEncoderParams(0.6, 0.8))
    r = rayleigh_residual(J2, psi)
    assert all(r <= eigen_residual(J2, psi, lam) + 1e-12 for lam in np.linspace(-20, 20, 41))


def test_encoder_scan_cfg_b():
    J, _, _ = cfg_b()
    report = appendix_a_necessity_scan(J)
    assert report.passed
    singlet = [pt for pt in report.points if pt.is_singlet]
    assert singlet and max(pt.max_residual for pt in singlet) < 1e-8
    triplet = next(pt for pt in report.points if pt.alpha == pt.beta)
    assert triplet.residuals["10"] > 0.1
    product_state = next(pt for pt in report.points if pt.alpha == 1 and pt.beta == 0)
    assert product_state.max_residual > 0.1
    data = report.to_json_dict()
    assert data["passed"] and data["points"] == len(default_encoder_grid())


def test_encoder_scan_rejects_zero_couplings():
    with pytest.raises(ValueError, match="nonzero"):
        appendix_a_necessity_scan(CouplingMatrix.uniform(2, 0.0, 1.0))


def test_encoder_scan_custom_grid():
    J, _, _ = cfg_a()
    report = appendix_a_necessity_scan(J, grid=[(0.6, -0.8), (1 / sqrt(2), -1 / sqrt(2))])
    assert not report.points[0].is_singlet
    assert report.points[0].max_residual > 1e-3
    assert report.points[1].max_residual < 1e-8


def test_difference_identity_example():
    J, _, _ = cfg_a()
    lhs, rhs = weight_difference_identity(J, "110", "101")
    assert lhs == pytest.approx(rhs, abs=1e-12)
    with pytest.raises(ValueError):
        weight_difference_identity(J, "110", "111")


@given(st.integers(0, 2**32 - 1))
def test_difference_identity_random(seed):
    J = random_pair_couplings(np.random.default_rng(seed), 4)
    report = appendix_b_witness(J)
    assert report.identity_max_error < 1e-10


def test_weight_witness_cfg_a_witness():
    J, _, _ = cfg_a()
    report = appendix_b_witness(J).to_json_dict()
    assert report["max_residual"] < 1e-10
    assert abs(report["witness"]["lambda_diff"]) >= pi - 1e-9
    x, y = report["witness"]["x"], report["witness"]["y"]
    assert x.count("1") == y.count("1")


def test_weight_witness_uniform_has_no_witness():
    assert appendix_b_witness(CouplingMatrix.uniform(4, 1.3, 0.4)).witness is None


def test_weight_witness_unequal_externals_equal_internals():
    J = CouplingMatrix.uniform(3, pi / 2, pi).with_external(1, 3, 3 * pi / 2)
    assert appendix_b_witness(J).witness is not None


def test_weight_witness_needs_three_pairs():
    with pytest.raises(ValueError):
        appendix_b_witness(CouplingMatrix.uniform(2, 1.0, 1.0))


def test_weight_witness_sampled_configs_have_witness():
    for seed in range(5):
        J = sample_couplings(4, TimingPlan(), "parity", seed)
        assert appendix_b_witness(J).witness is not None


def test_compare_detects_relative_phase():
    # Z on the input acts as identity on basis labels but not on superpositions
    c = Circuit(2, layout={"inputs": [0], "targets": [1]}).add("CNOT", 0, 1).add("Z", 0)
    cmp = compare_with_oracle(c, [0, 1], parity_oracle(1))
    assert min(v for k, v in cmp.fidelities.items() if "+" not in k) == pytest.approx(1)
    assert cmp.worst_fidelity < 0.5
    assert not cmp.passed()


def test_compare_reports_global_phase_and_leakage():
    c = Circuit(3).add("CNOT", 0, 1).add("Unitary", 2, matrix=np.diag([1j, 1j]))
    cmp = compare_with_oracle(c, [0, 1], parity_oracle(1))
    assert cmp.passed()
    assert cmp.global_phase == pytest.approx(1j)
    assert cmp.leakage == 0
    leaky = Circuit(3).add("CNOT", 0, 1).add("H", 2)
    assert compare_with_oracle(leaky, [0, 1], parity_oracle(1)).leakage == pytest.approx(sqrt(0.5))


def test_compare_arity_mismatch():
    with pytest.raises(ValueError):
        compare_with_oracle(Circuit(3), [0, 1, 2], parity_oracle(1))


def test_truth_table_unitary_is_permutation():
    U = TruthTable(2, {(0, 0): (0, 0), (0, 1): (1, 0), (1, 0): (0, 1), (1, 1): (1, 1)}).unitary()
    np.testing.assert_array_equal(U @ U.T, np.eye(4))
