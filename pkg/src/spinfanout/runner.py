"""Experiment configuration, orchestration and JSON reports."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .circuits import (
    MAX_MODQ_PAIRS,
    ModqCircuitSpec,
    ParityCircuitSpec,
    build_fanout_circuit,
    build_generalized_modq_circuit,
    build_parity_circuit,
    build_standard_modq_circuit,
    ghz_input,
    ghz_target,
)
from .constraints import (
    CONGRUENCE_TOL,
    ConstraintReport,
    ModqPlan,
    TimingPlan,
    cfg_a,
    cfg_b,
    check_modq_couplings,
    check_parity_couplings,
    check_uncompute_constraints,
    sample_couplings,
    sample_field,
)
from .encoding import all_bitstrings, eigen_data, encode_bitstring
from .engine import fidelity, simulate
from .oracles import (
    appendix_a_necessity_scan,
    appendix_b_witness,
    compare_with_oracle,
    eigen_residual,
    fanout_oracle,
    modq_oracle,
    parity_oracle,
)
from .spin_hamiltonian import CouplingMatrix, build_hamiltonian, build_j_squared_swap, load_couplings, validate_pair_structure

MODES = (
    "parity",
    "fanout",
    "ghz",
    "modq-generalized",
    "modq-standard",
    "eigencheck",
    "appendix-a",
    "appendix-b",
    "negative-perturbation",
)
VIOLATIONS = ("external", "k-even", "field")
SWEEP_VARIABLES = ("epsilon", "T-offset", "g-offset")
MAX_PARITY_PAIRS = 5
NAMED_COUPLINGS = {"cfg-a": cfg_a, "cfg-b": cfg_b}

THRESHOLDS = {
    "fidelity": 1 - 1e-9,
    "eigen_residual": 1e-10,
    "congruence": CONGRUENCE_TOL,
    "negative_fidelity": 0.999,
}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    """One experiment.

    ``couplings`` is a JSON file path, one of ``cfg-a``/``cfg-b``, or ``None``
    to sample pair-structured couplings from ``seed``.  ``g`` defaults to a
    sampled field (``pi`` for the named configurations) and must be given
    with a coupling file.  Parity-type modes use ``T``, ``T_prime`` (default
    ``T / k``) and ``k``; Mod_q modes use ``q``, ``T`` and the ``k`` family.
    """

    mode: str = "parity"
    p: int = 3
    q: int = 3
    seed: int = 0
    couplings: str | None = None
    g: float | None = None
    T: float = 1.0
    T_prime: float | None = None
    k: int = 1
    k_prime: int = 1
    k_double_prime: int = 1
    k_triple_prime: int | None = None
    active: int | None = None
    epsilon: float = 0.1
    violation: str = "external"
    seeds: int = 1
    magnitude_range: tuple[int, int] = (0, 4)

    def __post_init__(self):
        self.magnitude_range = tuple(self.magnitude_range)

    def validate(self) -> ExperimentConfig:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.p < 2:
            raise ConfigError(f"p must be at least 2, got {self.p}")
        if self.couplings in NAMED_COUPLINGS:
            named_p = NAMED_COUPLINGS[self.couplings]()[0].p
            if self.p != named_p:
                raise ConfigError(f"{self.couplings} has p = {named_p}, config says p = {self.p}")
        elif self.mode.startswith("modq"):
            if self.q < 2:
                raise ConfigError(f"q must be at least 2, got {self.q}")
            if self.p + self.q - 1 > MAX_MODQ_PAIRS:
                raise ConfigError(f"p + q - 1 = {self.p + self.q - 1} exceeds {MAX_MODQ_PAIRS} pairs")
        elif self.mode in ("parity", "fanout", "ghz", "negative-perturbation") and self.p > MAX_PARITY_PAIRS:
            raise ConfigError(f"p = {self.p} exceeds the parity limit of {MAX_PARITY_PAIRS}")
        elif self.p > 6:
            raise ConfigError(f"p = {self.p} exceeds the dense operator limit of 6 pairs")
        if self.mode == "appendix-b" and self.p < 3:
            raise ConfigError("appendix-b needs p >= 3")
        if self.violation not in VIOLATIONS:
            raise ConfigError(f"unknown violation {self.violation!r}; expected one of {', '.join(VIOLATIONS)}")
        if self.seeds < 1:
            raise ConfigError("seeds must be positive")
        if self.couplings not in (None, *NAMED_COUPLINGS) and self.g is None:
            raise ConfigError("g must be given with a coupling file")
        if self.T <= 0 or (self.T_prime is not None and self.T_prime <= 0):
            raise ConfigError("evolution times must be positive")
        return self

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["magnitude_range"] = list(self.magnitude_range)
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_json_dict(data)


@dataclass
class RunReport:
    config: dict
    passed: bool
    fidelities: dict[str, float] = field(default_factory=dict)
    worst_fidelity: float | None = None
    global_phase: list[float] | None = None
    constraints: dict | None = None
    max_residual: float | None = None
    details: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=lambda: dict(THRESHOLDS))
    wall_time: float = 0.0

    def to_json_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# inputs


def parity_plan(config: ExperimentConfig) -> TimingPlan:
    T_prime = config.T / config.k if config.T_prime is None else config.T_prime
    return TimingPlan(config.T, T_prime, config.k)


def modq_plan(config: ExperimentConfig) -> ModqPlan:
    try:
        return ModqPlan(
            config.q, config.k, config.k_prime, config.k_double_prime, config.k_triple_prime, config.T
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parity_inputs(config: ExperimentConfig, seed: int | None = None):
    """``(couplings, g, plan)`` for the parity-type modes."""
    seed = config.seed if seed is None else seed
    if config.couplings in NAMED_COUPLINGS:
        J, g, plan = NAMED_COUPLINGS[config.couplings]()
        return J, g if config.g is None else config.g, plan
    try:
        plan = parity_plan(config)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if config.couplings is not None:
        J = _load(config.couplings)
        if J.p != config.p:
            raise ConfigError(f"coupling file has {J.p} pairs, config says p = {config.p}")
        return J, config.g, plan
    J = sample_couplings(config.p, plan, "parity", seed, config.magnitude_range)
    g = sample_field(plan, seed, config.magnitude_range) if config.g is None else config.g
    return J, g, plan


def modq_inputs(config: ExperimentConfig):
    plan = modq_plan(config)
    z = config.p + config.q - 1
    if config.couplings is not None:
        if config.couplings in NAMED_COUPLINGS:
            raise ConfigError("named configurations are parity configurations")
        J = _load(config.couplings)
        if J.p != z:
            raise ConfigError(f"coupling file has {J.p} pairs, Mod_q needs z = p + q - 1 = {z}")
        return J, config.g, plan
    J = sample_couplings(z, plan, "modq", config.seed, config.magnitude_range)
    g = sample_field(plan, config.seed, config.magnitude_range) if config.g is None else config.g
    return J, g, plan


def _load(path) -> CouplingMatrix:
    try:
        return load_couplings(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load couplings from {path}: {exc}") from None


def parity_constraint_report(J: CouplingMatrix, g: float, plan: TimingPlan) -> ConstraintReport:
    report = check_parity_couplings(J, plan)
    for v in check_uncompute_constraints(J, plan, g).violations:
        if v not in report.violations:
            report.violations.append(v)
    return report


# --------------------------------------------------------------------------
# modes


def _oracle_report(config, circuit, data_wires, table, constraints) -> RunReport:
    cmp = compare_with_oracle(circuit, data_wires, table)
    passed = constraints.passed and cmp.passed(THRESHOLDS["fidelity"])
    return RunReport(
        config=config.to_json_dict(),
        passed=passed,
        fidelities=cmp.fidelities,
        worst_fidelity=cmp.worst_fidelity,
        global_phase=[cmp.global_phase.real, cmp.global_phase.imag],
        constraints=constraints.to_json_dict(),
        details={
            "phase_spread": cmp.phase_spread,
            "leakage": cmp.leakage,
            "equal_up_to_global_phase": cmp.equal_up_to_phase,
        },
    )


def _failed_constraints(config, constraints) -> RunReport:
    return RunReport(config=config.to_json_dict(), passed=False, constraints=constraints.to_json_dict())


def _parity_family(config: ExperimentConfig) -> RunReport:
    J, g, plan = parity_inputs(config)
    constraints = parity_constraint_report(J, g, plan)
    if not constraints.passed:
        return _failed_constraints(config, constraints)
    spec = ParityCircuitSpec(J, g, plan, config.active)
    if config.mode == "parity":
        c = build_parity_circuit(spec)
        return _oracle_report(config, c, c.layout["inputs"] + c.layout["targets"], parity_oracle(spec.p), constraints)
    c = build_fanout_circuit(spec)
    if config.mode == "fanout":
        return _oracle_report(config, c, c.layout["targets"] + c.layout["control"], fanout_oracle(spec.p), constraints)
    out = simulate(c, ghz_input(c))
    target = ghz_target(c)
    f = fidelity(target, out)
    overlap = np.vdot(target, out)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0 + 0j
    return RunReport(
        config=config.to_json_dict(),
        passed=f >= THRESHOLDS["fidelity"],
        fidelities={"ghz": f},
        worst_fidelity=f,
        global_phase=[phase.real, phase.imag],
        constraints=constraints.to_json_dict(),
    )


def _modq(config: ExperimentConfig) -> RunReport:
    J, g, plan = modq_inputs(config)
    constraints = check_modq_couplings(J, plan, g)
    if not constraints.passed:
        return _failed_constraints(config, constraints)
    spec = ModqCircuitSpec(config.p, J, g, plan)
    if config.mode == "modq-generalized":
        c = build_generalized_modq_circuit(spec)
        table = modq_oracle(config.p, config.q, generalized=True)
    else:
        c = build_standard_modq_circuit(spec)
        table = modq_oracle(config.p, config.q, generalized=False)
    return _oracle_report(config, c, c.layout["controls"] + c.layout["targets"], table, constraints)


def eigen_residuals(J: CouplingMatrix, g: float) -> dict[str, float]:
    """Per ``x``: the larger of the ``J^2`` and ``H_g`` eigen residuals of ``|x_L>``."""
    J2, _ = build_j_squared_swap(J)
    H = build_hamiltonian(J, g)
    out = {}
    for x in all_bitstrings(J.p):
        psi = encode_bitstring(x)
        data = eigen_data(J, g, x)
        out[str(x)] = max(
            eigen_residual(J2, psi, data.j2_eigenvalue),
            eigen_residual(H, psi, data.h_eigenvalue),
        )
    return out


def _eigencheck(config: ExperimentConfig) -> RunReport:
    per_seed = {}
    for s in range(config.seed, config.seed + config.seeds):
        J, g, _ = parity_inputs(config, seed=s)
        if not validate_pair_structure(J).passed:
            raise ConfigError("eigencheck needs pair-structured couplings")
        per_seed[str(s)] = max(eigen_residuals(J, g).values())
        if config.couplings is not None:
            break
    worst = max(per_seed.values())
    return RunReport(
        config=config.to_json_dict(),
        passed=worst < THRESHOLDS["eigen_residual"],
        max_residual=worst,
        details={"max_residual_per_seed": per_seed},
    )


def _appendix_a(config: ExperimentConfig) -> RunReport:
    J, _, _ = parity_inputs(config)
    scan = appendix_a_necessity_scan(J)
    data = scan.to_json_dict()
    return RunReport(config=config.to_json_dict(), passed=scan.passed, max_residual=data["max_residual"], details=data)


def _appendix_b(config: ExperimentConfig) -> RunReport:
    J, _, _ = parity_inputs(config)
    red = validate_pair_structure(J)
    if not red.passed:
        raise ConfigError("appendix-b needs pair-structured couplings")
    ext = red.external[np.triu_indices(J.p, 1)]
    uniform = bool(np.ptp(ext) < 1e-12 and np.ptp(red.internal) < 1e-12)
    result = appendix_b_witness(J)
    passed = result.identity_max_error < THRESHOLDS["eigen_residual"] and (result.witness is None) == uniform
    details = result.to_json_dict()
    details["uniform"] = uniform
    return RunReport(config=config.to_json_dict(), passed=passed, max_residual=result.identity_max_error, details=details)


def perturbed_inputs(config: ExperimentConfig, J: CouplingMatrix, g: float, plan: TimingPlan):
    """Apply ``config.violation`` of size ``config.epsilon`` to a valid configuration."""
    if config.violation == "external":
        red = validate_pair_structure(J)
        return J.with_external(1, 2, red.jext(1, 2) + config.epsilon), g, plan
    if config.violation == "field":
        return J, g + config.epsilon, plan
    return J, g, TimingPlan(2 * plan.T_prime, plan.T_prime, 2)


def _negative(config: ExperimentConfig) -> RunReport:
    J, g, plan = parity_inputs(config)
    if not parity_constraint_report(J, g, plan).passed:
        raise ConfigError("negative-perturbation needs a configuration that satisfies the constraints")
    J2, g2, plan2 = perturbed_inputs(config, J, g, plan)
    constraints = parity_constraint_report(J2, g2, plan2)
    spec = ParityCircuitSpec(J2, g2, plan2, config.active)
    c = build_parity_circuit(spec, enforce=False)
    cmp = compare_with_oracle(c, c.layout["inputs"] + c.layout["targets"], parity_oracle(spec.p))
    worst = cmp.worst_fidelity
    return RunReport(
        config=config.to_json_dict(),
        passed=worst < THRESHOLDS["negative_fidelity"],
        fidelities=cmp.fidelities,
        worst_fidelity=worst,
        global_phase=[cmp.global_phase.real, cmp.global_phase.imag],
        constraints=constraints.to_json_dict(),
        details={"detected": worst < THRESHOLDS["negative_fidelity"], "leakage": cmp.leakage},
    )


_RUNNERS = {
    "parity": _parity_family,
    "fanout": _parity_family,
    "ghz": _parity_family,
    "modq-generalized": _modq,
    "modq-standard": _modq,
    "eigencheck": _eigencheck,
    "appendix-a": _appendix_a,
    "appendix-b": _appendix_b,
    "negative-perturbation": _negative,
}


def run(config: ExperimentConfig) -> RunReport:
    config.validate()
    start = time.perf_counter()
    report = _RUNNERS[config.mode](config)
    report.wall_time = time.perf_counter() - start
    return report


# --------------------------------------------------------------------------
# sweeps


def sweep_worst_fidelity(config: ExperimentConfig, variable: str, value: float) -> float:
    """Worst-case fidelity with one knob mis-set by ``value``.

    ``epsilon`` shifts ``Jext(1, 2)``; ``T-offset`` lengthens both evolutions;
    ``g-offset`` shifts the physical field while the V gate keeps the nominal
    one.  Parity, fanout and both Mod_q modes are supported.
    """
    offsets = {"time_offset": 0.0, "field_offset": 0.0}
    if variable == "T-offset":
        offsets["time_offset"] = value
    elif variable == "g-offset":
        offsets["field_offset"] = value
    elif variable != "epsilon":
        raise ConfigError(f"unknown sweep variable {variable!r}; expected one of {', '.join(SWEEP_VARIABLES)}")
    eps = value if variable == "epsilon" else 0.0

    if config.mode.startswith("modq"):
        J, g, plan = modq_inputs(config)
        if eps:
            J = J.with_external(1, 2, validate_pair_structure(J).jext(1, 2) + eps)
        spec = ModqCircuitSpec(config.p, J, g, plan)
        generalized = config.mode == "modq-generalized"
        build = build_generalized_modq_circuit if generalized else build_standard_modq_circuit
        c = build(spec, enforce=False, **offsets)
        table = modq_oracle(config.p, config.q, generalized)
        data = c.layout["controls"] + c.layout["targets"]
    elif config.mode in ("parity", "fanout"):
        J, g, plan = parity_inputs(config)
        if eps:
            J = J.with_external(1, 2, validate_pair_structure(J).jext(1, 2) + eps)
        spec = ParityCircuitSpec(J, g, plan, config.active)
        if config.mode == "parity":
            c = build_parity_circuit(spec, enforce=False, **offsets)
            table, data = parity_oracle(spec.p), c.layout["inputs"] + c.layout["targets"]
        else:
            c = build_fanout_circuit(spec, enforce=False, **offsets)
            table, data = fanout_oracle(spec.p), c.layout["targets"] + c.layout["control"]
    else:
        raise ConfigError(f"sweeps support parity, fanout and modq modes, not {config.mode!r}")
    return compare_with_oracle(c, data, table).worst_fidelity


def emit_sweep_csv(config: ExperimentConfig, variable: str, values, path) -> list[tuple[float, float]]:
    """Write ``value,worst_fidelity`` rows to ``path`` and return them."""
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep range is empty")
    if variable not in SWEEP_VARIABLES:
        raise ConfigError(f"unknown sweep variable {variable!r}; expected one of {', '.join(SWEEP_VARIABLES)}")
    config.validate()
    rows = [(v, sweep_worst_fidelity(config, variable, v)) for v in values]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([variable, "worst_fidelity"])
        writer.writerows(rows)
    return rows


def parse_range(text: str) -> list[float]:
    """``"0:0.2:0.01"`` (inclusive stop) or a comma list ``"0,0.05,0.1"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ConfigError("sweep step must be positive")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(max(n, 0))]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad range {text!r}") from None

