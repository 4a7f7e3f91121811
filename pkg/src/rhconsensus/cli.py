"""Command-line front end: JSON configs in, JSON reports and CSV series out.

Subcommands: ``check`` runs the consensus analyses and emits a report bundle,
``simulate`` runs the closed loop and writes trajectory/disagreement CSVs,
``reproduce`` re-computes the bundled case studies against their recorded
values. Exit codes: 0 success (check: consensus guaranteed), 1 invalid input,
2 numerical failure, 3 condition violated.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import (
    check_consensus_iff,
    check_sufficient_1d,
    check_sufficient_lti,
    theta_oracle,
    theta_root,
    theta_root_unscaled_d,
)
from .errors import ConfigError, InputError, NumericalError, ToolkitError
from .graph import Topology, build_topology, gamma_spectrum
from .protocol import synthesize_gains
from .riccati import (
    LinearSystem,
    RhcDesign,
    check_p_monotonicity,
    delta_weight_bound,
    rho_bar,
    solve_p_recursion,
)
from .sim import SimConfig, Trajectory, detect_consensus, make_controllers, run_closed_loop

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_VIOLATED = 3

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class RunConfig:
    """Validated in-memory form of the JSON config."""

    system: LinearSystem
    topology: Topology
    design: RhcDesign
    sim: Optional[SimConfig] = None
    lambda_override: Optional[tuple[complex, ...]] = None


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown fields in {where}: {sorted(unknown)}")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing field '{key}' in {where}")
    return section[key]


def parse_config(raw: dict) -> RunConfig:
    """Build a RunConfig from parsed JSON, validating every precondition."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(raw, {"system", "graph", "design", "sim", "analysis"}, "config")
    system_raw = _require(raw, "system", "config")
    _reject_unknown(system_raw, {"A", "B"}, "system")
    system = LinearSystem(
        A=_require(system_raw, "A", "system"), B=_require(system_raw, "B", "system")
    )
    graph_raw = _require(raw, "graph", "config")
    _reject_unknown(graph_raw, {"adjacency"}, "graph")
    topology = build_topology(_require(graph_raw, "adjacency", "graph"))
    design_raw = _require(raw, "design", "config")
    _reject_unknown(
        design_raw, {"Q", "QN", "R", "horizon", "bound_mode"}, "design"
    )
    design = RhcDesign(
        Q=_require(design_raw, "Q", "design"),
        QN=_require(design_raw, "QN", "design"),
        R=_require(design_raw, "R", "design"),
        horizon=_require(design_raw, "horizon", "design"),
        bound_mode=design_raw.get("bound_mode", "corrected"),
    )
    if design.Q.shape[0] != system.n or design.R.shape[0] != system.m:
        raise ConfigError("design weight dimensions do not match the system")
    sim_cfg = None
    if "sim" in raw:
        sim_raw = raw["sim"]
        _reject_unknown(sim_raw, {"x0", "steps", "epsilon", "window"}, "sim")
        sim_cfg = SimConfig(
            x0=_require(sim_raw, "x0", "sim"),
            steps=_require(sim_raw, "steps", "sim"),
            epsilon=sim_raw.get("epsilon", 1e-6),
            window=sim_raw.get("window", 1),
        )
        if sim_cfg.x0.shape != (topology.size, system.n):
            raise ConfigError(
                f"x0 must have shape {(topology.size, system.n)}, "
                f"got {sim_cfg.x0.shape}"
            )
    override = None
    if "analysis" in raw:
        analysis_raw = raw["analysis"]
        _reject_unknown(analysis_raw, {"lambda_override"}, "analysis")
        pairs = analysis_raw.get("lambda_override")
        if pairs is not None:
            override = tuple(complex(re, im) for re, im in pairs)
    return RunConfig(
        system=system,
        topology=topology,
        design=design,
        sim=sim_cfg,
        lambda_override=override,
    )


def config_to_dict(config: RunConfig) -> dict:
    """Serialize back to the JSON schema; parse(serialize(c)) == c."""
    out: dict = {
        "system": {"A": config.system.A.tolist(), "B": config.system.B.tolist()},
        "graph": {"adjacency": config.topology.digraph.adjacency.tolist()},
        "design": {
            "Q": config.design.Q.tolist(),
            "QN": config.design.QN.tolist(),
            "R": config.design.R.tolist(),
            "horizon": config.design.horizon,
            "bound_mode": config.design.bound_mode,
        },
    }
    if config.sim is not None:
        out["sim"] = {
            "x0": config.sim.x0.tolist(),
            "steps": config.sim.steps,
            "epsilon": config.sim.epsilon,
            "window": config.sim.window,
        }
    if config.lambda_override is not None:
        out["analysis"] = {
            "lambda_override": [[z.real, z.imag] for z in config.lambda_override]
        }
    return out


def load_config(path: str) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return parse_config(raw)


def _jsonable(value):
    """Recursive JSON encoding; non-finite floats become strings."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, complex):
        return [_jsonable(value.real), _jsonable(value.imag)]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _simulate(config: RunConfig) -> Trajectory:
    schedules = [
        synthesize_gains(config.system, config.design, int(d))
        for d in config.topology.in_degrees
    ]
    controllers = make_controllers(config.topology, schedules)
    return run_closed_loop(config.system, config.topology, controllers, config.sim)


def build_report(config: RunConfig) -> dict:
    """The full report bundle for ``check``."""
    system, topology, design = config.system, config.topology, config.design
    report = check_consensus_iff(system, topology, design)
    P = solve_p_recursion(system, design)
    margins = check_p_monotonicity(P)
    rho = rho_bar(system, design.R, P[1])
    bound = delta_weight_bound(rho, design)
    lti = check_sufficient_lti(
        system, topology, design, lambda_override=config.lambda_override
    )
    bundle = {
        "consensus": {
            "spanning_tree": report.spanning_tree,
            "verdict": report.verdict,
            "max_radius": report.max_radius,
            "modes": [
                {"lambda": m.lam, "radius": m.radius} for m in report.modes
            ],
        },
        "sufficiency_lti": {
            "verdict": lti.verdict,
            "bound_mode": lti.bound_mode,
            "condition12_margin": lti.condition12_margin,
            "condition13": [
                {
                    "lambda": c.lam,
                    "min_eigenvalue": c.min_eigenvalue,
                    "lhs": c.lhs,
                }
                for c in lti.condition13
            ],
        },
        "sufficiency_scalar": None,
        "riccati": {
            "monotonicity_margins": margins,
            "rho_bar": rho,
            "delta_bound": bound,
            "bound_mode": design.bound_mode,
        },
        "simulation": None,
    }
    if system.n == 1 and system.m == 1:
        scalar = check_sufficient_1d(system, topology, design)
        bundle["sufficiency_scalar"] = {
            "verdict": scalar.verdict,
            "bound_mode": scalar.bound_mode,
            "condition12_margin": scalar.condition12_margin,
            "alpha": scalar.alpha,
            "a_c": scalar.a_c,
            "theta_min": scalar.theta_min,
            "bound_value": scalar.bound_value,
            "modes": [
                {"lambda": t.lam, "c": t.c, "d": t.d, "theta": t.theta}
                for t in scalar.mode_thresholds
            ],
        }
    if config.sim is not None:
        trajectory = _simulate(config)
        k_star = detect_consensus(trajectory, config.sim.epsilon, config.sim.window)
        bundle["simulation"] = {
            "consensus_step": k_star,
            "final_disagreement": float(trajectory.disagreement[-1]),
            "steps": config.sim.steps,
        }
    return bundle


def cmd_check(config_path: str, out: Optional[str], bound_mode: Optional[str]) -> int:
    try:
        config = load_config(config_path)
        if bound_mode is not None:
            config = RunConfig(
                system=config.system,
                topology=config.topology,
                design=RhcDesign(
                    Q=config.design.Q,
                    QN=config.design.QN,
                    R=config.design.R,
                    horizon=config.design.horizon,
                    bound_mode=bound_mode,
                ),
                sim=config.sim,
                lambda_override=config.lambda_override,
            )
        bundle = build_report(config)
    except ToolkitError as exc:
        return _emit_error(exc, out)
    text = json.dumps(_jsonable(bundle), indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if bundle["consensus"]["verdict"] else EXIT_VIOLATED


def _emit_error(exc: ToolkitError, out: Optional[str] = None) -> int:
    payload = json.dumps({"error": exc.code, "message": str(exc)})
    if out:
        Path(out).write_text(payload + "\n")
    else:
        print(payload)
    return EXIT_INPUT if isinstance(exc, InputError) else EXIT_NUMERICAL


def write_trajectory_csv(trajectory: Trajectory, path: Path) -> None:
    """Schema: k,agent,x1..xn,u1..um with inputs blank at the final step."""
    steps, m_agents, n = trajectory.states.shape[0] - 1, *trajectory.states.shape[1:]
    m_in = trajectory.inputs.shape[2]
    header = (
        ["k", "agent"]
        + [f"x{c + 1}" for c in range(n)]
        + [f"u{c + 1}" for c in range(m_in)]
    )
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(steps + 1):
            for i in range(m_agents):
                row = [str(k), str(i + 1)]
                row += [_FLOAT_FMT % v for v in trajectory.states[k, i]]
                if k < steps:
                    row += [_FLOAT_FMT % v for v in trajectory.inputs[k, i]]
                else:
                    row += [""] * m_in
                writer.writerow(row)


def write_disagreement_csv(trajectory: Trajectory, path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "d"])
        for k, d in enumerate(trajectory.disagreement):
            writer.writerow([str(k), _FLOAT_FMT % d])


def cmd_simulate(config_path: str, out_dir: str) -> int:
    try:
        config = load_config(config_path)
        if config.sim is None:
            raise ConfigError("config has no sim section")
        trajectory = _simulate(config)
    except ToolkitError as exc:
        return _emit_error(exc)
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(trajectory, directory / "trajectory.csv")
    write_disagreement_csv(trajectory, directory / "disagreement.csv")
    k_star = detect_consensus(trajectory, config.sim.epsilon, config.sim.window)
    print(
        json.dumps(
            _jsonable(
                {
                    "consensus_step": k_star,
                    "final_disagreement": float(trajectory.disagreement[-1]),
                    "steps": config.sim.steps,
                }
            )
        )
    )
    return EXIT_OK


def _case_paths(case_id: str):
    base = resources.files("rhconsensus").joinpath("cases")
    return base.joinpath(f"{case_id}.json"), base.joinpath(f"{case_id}_checks.json")


def load_bundled_case(case_id: str) -> tuple[RunConfig, list[dict]]:
    config_res, checks_res = _case_paths(case_id)
    try:
        raw = json.loads(config_res.read_text())
        checks = json.loads(checks_res.read_text())["checks"]
    except FileNotFoundError as exc:
        raise ConfigError(f"unknown case id {case_id!r}") from exc
    return parse_config(raw), checks


def _case_quantities(config: RunConfig) -> dict:
    """Every quantity the bundled check files may reference."""
    system, topology, design = config.system, config.topology, config.design
    P = solve_p_recursion(system, design)
    N = design.horizon
    quantities: dict = {
        "p_final_step_decrease": P[N] - P[N - 1],
        "p_penultimate": P[N - 1],
        "monotonicity_min_margin": float(check_p_monotonicity(P).min()),
        "max_mode_radius": check_consensus_iff(system, topology, design).max_radius,
        "gamma_spectrum": list(gamma_spectrum(topology)),
    }
    rho = rho_bar(system, design.R, P[1])
    for mode in ("paper", "corrected"):
        modal_design = RhcDesign(
            Q=design.Q, QN=design.QN, R=design.R, horizon=N, bound_mode=mode
        )
        quantities[f"delta_bound_{mode}"] = delta_weight_bound(rho, modal_design)
    if system.n == 1 and system.m == 1:
        scalar = check_sufficient_1d(system, topology, design)
        a = float(system.A[0, 0])
        b = float(system.B[0, 0])
        r = float(design.R[0, 0])
        p1 = float(P[1][0, 0])
        lams = [t.lam for t in scalar.mode_thresholds]
        quantities["theta_min_derived"] = scalar.theta_min
        quantities["theta_min_unscaled_d"] = min(
            theta_root_unscaled_d(a, b, r, p1, lam) for lam in lams
        )
        diffs = []
        for lam in lams:
            root = theta_root(a, b, r, p1, lam)
            oracle = theta_oracle(a, b, r, p1, lam)
            diffs.append(0.0 if math.isinf(root) and math.isinf(oracle) else abs(root - oracle))
        quantities["theta_vs_oracle_maxdiff"] = max(diffs)
    if config.lambda_override is not None:
        lti = check_sufficient_lti(
            system, topology, design, lambda_override=config.lambda_override
        )
        quantities["condition13_lhs_override"] = lti.condition13[0].lhs
        quantities["condition13_min_eig_override"] = lti.condition13[0].min_eigenvalue
    if config.sim is not None:
        trajectory = _simulate(config)
        k_star = detect_consensus(trajectory, config.sim.epsilon, config.sim.window)
        quantities["consensus_step"] = math.inf if k_star is None else k_star
        quantities["final_disagreement"] = float(trajectory.disagreement[-1])
    return quantities


def _spectrum_matches(computed: list[complex], expected_pairs: list, tol: float) -> bool:
    expected = [complex(re, im) for re, im in expected_pairs]
    if len(computed) != len(expected):
        return False
    remaining = list(computed)
    for target in expected:
        best = min(range(len(remaining)), key=lambda i: abs(remaining[i] - target))
        if abs(remaining[best] - target) > tol:
            return False
        remaining.pop(best)
    return True


def _format_value(value) -> str:
    if isinstance(value, np.ndarray):
        if value.size == 1:
            return f"{float(value.reshape(())):.6g}"
        return np.array2string(value, precision=6, suppress_small=False)
    if isinstance(value, list):
        return "[" + ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in value) + "]"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def evaluate_checks(quantities: dict, checks: list[dict]) -> list[dict]:
    """Compare computed quantities against the bundled expectations.

    Row statuses: PASS, FAIL, or DEVIATION (out of tolerance but explicitly
    allowed by the bundle, with the note recording why).
    """
    def scalar(value) -> float:
        arr = np.asarray(value, dtype=float)
        if arr.size != 1:
            raise ConfigError("scalar check applied to a non-scalar quantity")
        return float(arr.reshape(()))

    rows = []
    for check in checks:
        computed = quantities[check["key"]]
        kind = check["kind"]
        tol = check.get("tol")
        expected = check.get("expected")
        if kind == "value":
            ok = abs(scalar(computed) - float(expected)) <= tol
        elif kind == "matrix":
            ok = bool(
                np.abs(np.asarray(computed, dtype=float) - np.asarray(expected)).max()
                <= tol
            )
        elif kind == "at_most":
            ok = scalar(computed) <= float(expected)
        elif kind == "exceeds":
            ok = scalar(computed) > float(expected)
        elif kind == "spectrum":
            ok = _spectrum_matches(computed, expected, tol)
        else:
            raise ConfigError(f"unknown check kind {kind!r}")
        status = "PASS" if ok else (
            "DEVIATION" if check.get("allow_deviation") else "FAIL"
        )
        rows.append(
            {
                "label": check["label"],
                "kind": kind,
                "expected": expected,
                "computed": computed,
                "status": status,
                "note": check.get("note"),
            }
        )
    return rows


def cmd_reproduce(case_id: str) -> int:
    try:
        config, checks = load_bundled_case(case_id)
        quantities = _case_quantities(config)
        rows = evaluate_checks(quantities, checks)
    except ToolkitError as exc:
        return _emit_error(exc)
    width = max(len(r["label"]) for r in rows)
    print(f"{case_id}: recorded vs computed")
    for row in rows:
        expected = row["expected"]
        if row["kind"] == "spectrum":
            expected = [complex(re, im) for re, im in expected]
        elif isinstance(expected, list):
            expected = np.asarray(expected, dtype=float)
        expected = _format_value(expected)
        computed = _format_value(row["computed"])
        print(f"  {row['label']:<{width}}  [{row['status']}]")
        print(f"    {'expected':<9} {expected}")
        print(f"    {'computed':<9} {computed}")
        if row["note"]:
            print(f"    note: {row['note']}")
    failed = [r for r in rows if r["status"] == "FAIL"]
    return EXIT_VIOLATED if failed else EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rhconsensus",
        description=(
            "Synthesis, consensus analysis, and closed-loop simulation of "
            "receding-horizon consensus protocols on directed graphs"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_check = sub.add_parser("check", help="run the consensus checks on a config")
    p_check.add_argument("config")
    p_check.add_argument("--out", default=None, help="write the JSON report here")
    p_check.add_argument(
        "--bound-mode",
        choices=("paper", "corrected"),
        default=None,
        help="override the design's Delta-bound summation mode",
    )
    p_sim = sub.add_parser("simulate", help="run the closed loop, write CSVs")
    p_sim.add_argument("config")
    p_sim.add_argument("--out-dir", default=".", help="directory for the CSV files")
    p_rep = sub.add_parser("reproduce", help="re-compute a bundled case study")
    p_rep.add_argument("case_id")
    args = parser.parse_args(argv)
    if args.command == "check":
        return cmd_check(args.config, args.out, args.bound_mode)
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out_dir)
    return cmd_reproduce(args.case_id)


if __name__ == "__main__":
    sys.exit(main())
