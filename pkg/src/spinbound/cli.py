"""Command-line front end: ``spinbound {energy,observable,export,oracle,blocks}``.

Settings come from an optional JSON/YAML file overridden by flags.  Every run
prints a human-readable summary and, with ``--report``, writes one flat JSON
document of the same values.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

from .config import ConfigError, RelaxationConfig, load_file
from .models import FAMILIES, ModelSpec, observable, observable_terms
from .relaxation import assemble, block_ledger, model_basis, symmetry_group

TIMING_FIELDS = ("time", "wall_time")
TOGGLES = ("sign_model", "sign_hamiltonian", "conjugate", "translation_dft", "axis_permutation", "point_group",
           "realify", "optimality_psd")


def load_references() -> dict:
    text = resources.files("spinbound").joinpath("data/references.json").read_text()
    return json.loads(text)


def find_reference(model: ModelSpec, method: str | None = None) -> dict | None:
    """The cited per-spin energy for ``model`` (DMRG/QMC/ED preferred over SDP values)."""
    for entry in load_references()["energy"]:
        if entry["model"] != model.family or entry["L"] != model.L:
            continue
        if model.has_j2 and not math.isclose(entry.get("J2", 0.0), model.J2):
            continue
        if method is None and entry["method"] == "SDP":
            continue
        if method is not None and entry["method"] != method:
            continue
        return entry
    return None


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=FAMILIES, default=None)
    common.add_argument("--L", type=int, default=None)
    common.add_argument("--J2", type=float, default=None)
    common.add_argument("--config", help="JSON or YAML settings file")
    common.add_argument("--report", help="write the flat JSON report here")
    relax = argparse.ArgumentParser(add_help=False)
    relax.add_argument("--d", type=int)
    relax.add_argument("--r", type=int)
    relax.add_argument("--rdm-k", type=int, action="append", dest="rdm_k", help="repeatable")
    relax.add_argument("--commutator-basis", dest="commutator_basis")
    relax.add_argument("--optimality-basis", dest="optimality_basis")
    relax.add_argument("--solver")
    relax.add_argument("--feas-tol", type=float, dest="feas_tol")
    relax.add_argument("--gap-tol", type=float, dest="gap_tol")
    for name in TOGGLES:
        flag = name.replace("_", "-")
        relax.add_argument(f"--{flag}", dest=name, action="store_true", default=None)
        relax.add_argument(f"--no-{flag}", dest=name, action="store_false")

    p = argparse.ArgumentParser(prog="spinbound", description="Certified bounds for Heisenberg spin models.")
    sub = p.add_subparsers(dest="command", required=True)
    e = sub.add_parser("energy", parents=[common, relax], help="lower bound on the ground energy")
    e.add_argument("--reference", type=float, help="per-spin reference energy for the gap")
    o = sub.add_parser("observable", parents=[common, relax], help="bound an observable in an energy window")
    o.add_argument("--obs", required=True, help="c1, c2, ..., cmax or spipi")
    o.add_argument("--sense", choices=("min", "max", "both"), default="both")
    o.add_argument("--elb", type=float, help="total-energy lower end of the window")
    o.add_argument("--eub", type=float, help="total-energy upper end of the window")
    o.add_argument("--oracle-window", type=float, metavar="EPS",
                   help="use the exact ground energy +- EPS as the window")
    x = sub.add_parser("export", parents=[common, relax], help="write the relaxation as an SDPA file")
    x.add_argument("--output", "-o", required=True)
    x.add_argument("--dump-basis", help="also write the monomial basis, one word per line")
    q = sub.add_parser("oracle", parents=[common], help="exact diagonalization")
    q.add_argument("--obs", action="append", default=[], help="repeatable observable names")
    sub.add_parser("blocks", parents=[common, relax], help="block-size ledger without solving")
    return p


def _settings(args) -> tuple[ModelSpec, RelaxationConfig]:
    data = load_file(args.config) if args.config else {}
    model_data = {k: data.pop(k) for k in ("model", "L", "J2") if k in data}
    for key in ("model", "L", "J2"):
        if getattr(args, key) is not None:
            model_data[key] = getattr(args, key)
    if "model" not in model_data:
        raise ConfigError("model", "no model given (use --model or the config file)")
    if "L" not in model_data:
        raise ConfigError("L", "no system size given (use --L or the config file)")
    try:
        model = ModelSpec(model_data["model"], int(model_data["L"]), float(model_data.get("J2", 0.0)))
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from exc
    fields = set(RelaxationConfig.__dataclass_fields__)
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return model, RelaxationConfig.from_dict(data)


def _model_fields(model: ModelSpec) -> dict:
    return {"model": model.family, "L": model.L, "J2": model.J2, "n_sites": model.n_sites}


def _config_fields(cfg: RelaxationConfig) -> dict:
    out = {}
    for k, v in cfg.to_dict().items():
        out[f"cfg.{k}"] = ",".join(map(str, v)) if isinstance(v, list) else v
    return out


def cmd_energy(args) -> tuple[dict, int]:
    from .sdp import bound_energy

    model, cfg = _settings(args)
    sol = bound_energy(model, cfg)
    report = {"command": "energy", **_model_fields(model), **_config_fields(cfg)}
    report.update({f"sdp.{k}": v for k, v in sol.report().items()})
    ref = args.reference
    source = "flag"
    if ref is None:
        entry = find_reference(model)
        if entry is not None:
            ref, source = entry["value"], f"{entry['method']}: {entry['source']}"
    report["reference"] = ref
    report["reference_source"] = source if ref is not None else None
    if ref is not None and sol.ok:
        report["gap_per_spin"] = ref - sol.per_spin
        report["relative_gap_percent"] = 100 * (ref - sol.per_spin) / abs(ref)
    return report, 0 if sol.ok else 2


def cmd_observable(args) -> tuple[dict, int]:
    from .sdp import bound_observable

    model, cfg = _settings(args)
    if args.oracle_window is not None:
        from .oracle import diagonalize

        e0 = diagonalize(model).energy
        elb, eub = e0 - args.oracle_window, e0 + args.oracle_window
    elif args.elb is not None and args.eub is not None:
        elb, eub = args.elb, args.eub
    else:
        raise ConfigError("window", "observable needs --elb and --eub, or --oracle-window")
    if elb > eub:
        raise ConfigError("window", f"empty energy window [{elb}, {eub}]")
    group = symmetry_group(model, cfg)
    try:
        obs = observable(model, args.obs, group)
    except ValueError as exc:
        raise ConfigError("obs", str(exc)) from exc
    problem = assemble(model, cfg)
    report = {"command": "observable", **_model_fields(model), **_config_fields(cfg), "obs": args.obs,
              "elb": elb, "eub": eub}
    senses = ("min", "max") if args.sense == "both" else (args.sense,)
    code = 0
    for sense in senses:
        sol = bound_observable(model, cfg, obs, elb, eub, sense, problem=problem)
        report.update({f"{sense}.{k}": v for k, v in sol.report().items() if k != "per_spin"})
        if not sol.ok:
            code = 2
    if args.sense == "both" and code == 0:
        report["width"] = report["max.bound"] - report["min.bound"]
    return report, code


def cmd_export(args) -> tuple[dict, int]:
    from .sdp import export_sdpa

    model, cfg = _settings(args)
    p = assemble(model, cfg)
    export_sdpa(p, args.output)
    if args.dump_basis:
        Path(args.dump_basis).write_text(model_basis(model, cfg).dump())
    report = {"command": "export", **_model_fields(model), **_config_fields(cfg), "output": args.output,
              "n_vars": p.n_vars, "n_blocks": len(p.blocks), "max_block": p.max_block(),
              "n_equalities": len(p.equalities)}
    return report, 0


def cmd_oracle(args) -> tuple[dict, int]:
    from .oracle import diagonalize, expectation

    model, _ = _settings(args)
    gs = diagonalize(model)
    report = {"command": "oracle", **_model_fields(model), "energy": gs.energy,
              "energy_per_spin": gs.energy_per_spin, "degeneracy": gs.degeneracy}
    for name in args.obs:
        try:
            terms = observable_terms(model, name)
        except ValueError as exc:
            raise ConfigError("obs", str(exc)) from exc
        report[f"obs.{name}"] = expectation(gs, terms)
    return report, 0


def cmd_blocks(args) -> tuple[dict, int]:
    model, cfg = _settings(args)
    ledger = block_ledger(model, cfg)
    report = {"command": "blocks", **_model_fields(model), **_config_fields(cfg)}
    for k, v in ledger.items():
        report[k] = ",".join(map(str, v)) if isinstance(v, list) else v
    return report, 0


COMMANDS = {"energy": cmd_energy, "observable": cmd_observable, "export": cmd_export, "oracle": cmd_oracle,
            "blocks": cmd_blocks}


def format_report(report: dict) -> str:
    width = max(map(len, report))
    return "\n".join(f"{k:<{width}}  {v}" for k, v in report.items())


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        report, code = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(format_report(report))
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1, default=str) + "\n")
    if code:
        statuses = [v for k, v in report.items() if k.endswith("status") and v not in ("optimal", "near-optimal")]
        print(f"run failed: status {', '.join(map(str, statuses))}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
