"""Command line entry point.

Exit codes: 0 pass, 1 fail, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .constraints import check_modq_couplings
from .runner import (
    SWEEP_VARIABLES,
    VIOLATIONS,
    ConfigError,
    ExperimentConfig,
    emit_sweep_csv,
    load_config,
    modq_inputs,
    parity_constraint_report,
    parity_inputs,
    parse_range,
    run,
)
from .spin_hamiltonian import validate_pair_structure

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# subcommand -> mode (sweep and validate pick theirs from the config)
SUBCOMMAND_MODES = {
    "parity": "parity",
    "fanout": "fanout",
    "ghz": "ghz",
    "modq": "modq-generalized",
    "eigencheck": "eigencheck",
    "appendix-a": "appendix-a",
    "appendix-b": "appendix-b",
    "perturb": "negative-perturbation",
}

# flag dest -> config field
_FIELDS = {
    "p": "p",
    "q": "q",
    "seed": "seed",
    "seeds": "seeds",
    "couplings": "couplings",
    "g": "g",
    "T": "T",
    "T_prime": "T_prime",
    "k": "k",
    "k_prime": "k_prime",
    "k_double_prime": "k_double_prime",
    "k_triple_prime": "k_triple_prime",
    "active": "active",
    "epsilon": "epsilon",
    "violation": "violation",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; flags override its fields")
    common.add_argument("--report", help="write the JSON report here as well as to stdout")
    common.add_argument("--seed", type=int)
    common.add_argument("--seeds", type=int, help="number of consecutive seeds (eigencheck)")
    common.add_argument("--p", type=int, help="number of pairs / controls")
    common.add_argument("--q", type=int, help="modulus for Mod_q")
    common.add_argument("--couplings", help="coupling JSON file, or cfg-a / cfg-b")
    common.add_argument("--g", type=float, help="field strength")
    common.add_argument("--T", type=float)
    common.add_argument("--T-prime", dest="T_prime", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--k-prime", dest="k_prime", type=int)
    common.add_argument("--k-double-prime", dest="k_double_prime", type=int)
    common.add_argument("--k-triple-prime", dest="k_triple_prime", type=int)
    common.add_argument("--active", type=int, help="active pair (1-based, default p)")

    parser = _Parser(prog="spinfanout", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("validate", parents=[common], help="check couplings against the constraints").add_argument(
        "--kind", choices=("parity", "modq"), default="parity"
    )
    for name in ("parity", "fanout", "ghz", "eigencheck", "appendix-a", "appendix-b"):
        sub.add_parser(name, parents=[common])
    sub.add_parser("modq", parents=[common]).add_argument(
        "--standard", action="store_true", help="single-target Mod_q instead of the generalized gate"
    )
    perturb = sub.add_parser("perturb", parents=[common], help="negative control: break one constraint")
    perturb.add_argument("--epsilon", type=float)
    perturb.add_argument("--violation", choices=VIOLATIONS)
    sweep = sub.add_parser("sweep", parents=[common], help="worst fidelity against a mis-set knob")
    sweep.add_argument("--variable", choices=SWEEP_VARIABLES, required=True)
    sweep.add_argument("--range", dest="values", required=True, help="start:stop:step or a comma list")
    sweep.add_argument("--mode", choices=("parity", "fanout", "modq-generalized", "modq-standard"))
    sweep.add_argument("--csv", required=True)
    return parser


def config_from_args(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    for dest, name in _FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            setattr(config, name, value)
    if args.command in SUBCOMMAND_MODES:
        config.mode = SUBCOMMAND_MODES[args.command]
        if args.command == "modq" and args.standard:
            config.mode = "modq-standard"
    elif args.command == "sweep" and args.mode:
        config.mode = args.mode
    return config


def _emit(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if path:
        Path(path).write_text(text + "\n")


def _validate(config: ExperimentConfig, kind: str, report_path) -> int:
    if kind == "modq":
        config.mode = "modq-generalized"
        J, g, plan = modq_inputs(config.validate())
        report = check_modq_couplings(J, plan, g)
    else:
        J, g, plan = parity_inputs(config.validate())
        report = parity_constraint_report(J, g, plan)
    structure = validate_pair_structure(J)
    payload = {
        "kind": kind,
        "pair_structured": structure.passed,
        "constraints": report.to_json_dict(),
        "couplings": J.to_json_dict(),
        "g": g,
        "plan": plan.to_json_dict(),
    }
    _emit(payload, report_path)
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if args.command == "validate":
            return _validate(config, args.kind, args.report)
        if args.command == "sweep":
            rows = emit_sweep_csv(config, args.variable, parse_range(args.values), args.csv)
            _emit({"csv": args.csv, "variable": args.variable, "rows": [list(r) for r in rows]}, args.report)
            return EXIT_PASS
        report = run(config)
    except ConfigError as exc:
        print(f"spinfanout: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report.to_json_dict(), args.report)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
