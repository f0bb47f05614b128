"""Batch command-line front end.

Every command reads a scenario file (except ``report``), runs a seeded
deterministic computation, and writes ``PREFIX.csv`` plus ``PREFIX.json``
(``report`` additionally writes ``PREFIX_plot.csv``).  Exit codes: 0 on
success, 2 on validation failure, 3 on a numerical guard (overflow cap,
degenerate jet, failed finite-difference check).

Monte Carlo commands emit CSV rows with the fixed columns

    metric_kind,k,n,r,q_mode,delta,N,seed,mean,stderr,prefactor,lower_bound,positive

and identical config plus seed reproduces byte-identical output.  The
only environment knob is JETMORSE_THREADS (0 = auto); it changes block
scheduling, never results.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import jets as jt
from . import metrics as mt
from . import morse as ms
from . import wronskians as wr
from .errors import NumericalGuardError, ScenarioFormatError
from .geometry import (
    BaseScenario,
    eta_form,
    fiber_trace,
    signature,
    sym_power_curvature,
    top_power,
)
from .scenario_io import read_scenario

__all__ = ["RunConfig", "parse_scenario", "build_parser", "run", "main", "console_main"]

ESTIMATE_COLUMNS = [
    "metric_kind",
    "k",
    "n",
    "r",
    "q_mode",
    "delta",
    "N",
    "seed",
    "mean",
    "stderr",
    "prefactor",
    "lower_bound",
    "positive",
]


@dataclass
class RunConfig:
    """Everything one command invocation needs."""

    command: str
    scenario: Path | None
    metric: str
    k: int
    p: str
    eps0: float
    l_max: int
    q_mode: ms.QMode
    samples: int
    batches: int
    seed: int
    delta_grid: list[float] | None
    out: Path
    inputs: list[Path]
    fd_threshold: float


def parse_scenario(path) -> BaseScenario:
    """Load and validate a scenario file (thin wrapper, kept for callers)."""
    return read_scenario(path)


# ---------------------------------------------------------------------------
# Argument handling.

def _uint64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _q_mode(text: str) -> ms.QMode:
    try:
        return ms.QMode.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _delta_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("delta grid must look like a:b:step")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("delta grid needs step > 0 and b >= a")
    grid = []
    value = lo
    while value <= hi + 1e-12:
        grid.append(round(value, 12))
        value += step
    return grid


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jetmorse",
        description="Jet-metric curvature runs and Morse integral estimates.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="scenario JSON file")
    common.add_argument(
        "--metric",
        choices=[k.value for k in mt.MetricKind],
        default="gg",
        help="metric family (default gg)",
    )
    common.add_argument("--k", type=int, default=3, help="jet order (default 3)")
    common.add_argument("--p", default="auto", help="integer exponent or 'auto'")
    common.add_argument("--eps0", type=float, default=0.1, help="epsilon schedule base")
    common.add_argument("--lmax", type=int, default=3, help="symmetric power cap (sympow)")
    common.add_argument(
        "--q", type=_q_mode, default=ms.QMode.at_most(1), help="q mode, exact:Q or atmost:Q"
    )
    common.add_argument("--samples", type=int, default=10_000, help="Monte Carlo samples")
    common.add_argument("--batches", type=int, default=20, help="batches for converge")
    common.add_argument("--seed", type=_uint64, required=True, help="unsigned 64-bit seed")
    common.add_argument("--delta-grid", type=_delta_grid, help="twist grid a:b:step")
    common.add_argument("--out", type=Path, required=True, help="output path prefix")
    common.add_argument(
        "--fd-threshold", type=float, default=1e-3, help="fd-check failure threshold"
    )
    common.add_argument("--inputs", type=Path, nargs="+", default=[], help="CSV inputs (report)")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("act", "apply a random reparametrization to a random jet"),
        ("wronskian", "wedge Wronskians and scaling weights of a random jet"),
        ("invariants", "normalization invariance and numerator values"),
        ("curvature", "limit forms, signatures, and the closed-form value"),
        ("fd-check", "finite-difference check of the curvature expansion"),
        ("sympow", "symmetric-power curvature trace diagnostics"),
        ("morse", "Monte Carlo Morse estimate with verdict"),
        ("delta-scan", "largest twist with a positive verdict"),
        ("converge", "batch-means convergence diagnostics"),
        ("report", "aggregate prior CSV outputs into a k-table"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        scenario=args.scenario,
        metric=args.metric,
        k=args.k,
        p=args.p,
        eps0=args.eps0,
        l_max=args.lmax,
        q_mode=args.q,
        samples=args.samples,
        batches=args.batches,
        seed=args.seed,
        delta_grid=args.delta_grid,
        out=args.out,
        inputs=list(args.inputs),
        fd_threshold=args.fd_threshold,
    )


def _metric_spec(config: RunConfig) -> mt.MetricSpec:
    kind = mt.MetricKind(config.metric)
    l_max = config.l_max if kind is mt.MetricKind.SYMPOW else None
    if config.p == "auto":
        return mt.MetricSpec.auto(kind, config.k, config.eps0, l_max)
    return mt.MetricSpec(
        kind, config.k, int(config.p), mt.geometric_epsilons(config.k, config.eps0), l_max
    )


# ---------------------------------------------------------------------------
# Output helpers.

def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]

def _matrix(arr: np.ndarray) -> list:
    if arr.ndim == 1:
        return [_pair(complex(v)) for v in arr]
    return [_matrix(row) for row in arr]


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    with path.open("w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _estimate_row(v: ms.Verdict, delta: float, seed: int) -> list[str]:
    e = v.estimate
    values = [
        e.metric_kind.value,
        e.k,
        e.n,
        e.r,
        str(e.q_mode),
        float(delta),
        e.samples,
        seed,
        float(e.mean),
        float(e.stderr),
        float(v.prefactor),
        float(v.lower_bound),
        bool(v.positive),
    ]
    return [_fmt(x) for x in values]


def _estimate_json(v: ms.Verdict) -> dict:
    e = v.estimate
    return {
        "metric_kind": e.metric_kind.value,
        "k": e.k,
        "n": e.n,
        "r": e.r,
        "q_mode": str(e.q_mode),
        "samples": e.samples,
        "mean": e.mean,
        "stderr": e.stderr,
        "prefactor": v.prefactor,
        "lower_bound": v.lower_bound,
        "positive": v.positive,
    }


def _random_jet(rng: np.random.Generator, k: int, r: int, lead_floor: float = 0.0) -> jt.Jet:
    while True:
        xi = (rng.standard_normal((k, r)) + 1j * rng.standard_normal((k, r))) / math.sqrt(2)
        if abs(xi[0, 0]) > lead_floor:
            return jt.Jet(xi)


def _random_reparam(rng: np.random.Generator, k: int) -> jt.Reparam:
    alpha = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2)
    # keep alpha_1 away from zero so inverse coefficients stay tame
    alpha[0] = (0.5 + rng.random()) * np.exp(2j * np.pi * rng.random())
    return jt.Reparam(alpha)


# ---------------------------------------------------------------------------
# Commands.

def _cmd_act(config: RunConfig, scenario: BaseScenario) -> int:
    rng = np.random.default_rng(config.seed)
    jet = _random_jet(rng, config.k, scenario.r)
    phi = _random_reparam(rng, config.k)
    acted = jt.act(phi, jet)
    oracle = np.stack(
        [
            jt.compose_scalar(jt.jet_component(jet, m), jt.ScalarJet(phi.alpha)).coeffs
            for m in range(jet.r)
        ],
        axis=1,
    )
    residual = float(np.max(np.abs(acted.xi - oracle)))
    _write_json(
        config.out.with_suffix(".json"),
        {
            "command": "act",
            "k": config.k,
            "r": scenario.r,
            "seed": config.seed,
            "jet": _matrix(jet.xi),
            "reparam": _matrix(phi.alpha),
            "acted": _matrix(acted.xi),
            "composition_residual": residual,
        },
    )
    _write_csv(
        config.out.with_suffix(".csv"),
        ["quantity", "value"],
        [["composition_residual", _fmt(residual)]],
    )
    return 0


def _cmd_wronskian(config: RunConfig, scenario: BaseScenario) -> int:
    rng = np.random.default_rng(config.seed)
    jet = _random_jet(rng, config.k, scenario.r)
    phi = _random_reparam(rng, config.k)
    acted = jt.act(phi, jet)
    rows = []
    detail = []
    for s in range(1, config.k + 1):
        weight = wr.wronskian_weight(s)
        base = wr.wedge_wronskian(jet, s)
        moved = wr.wedge_wronskian(acted, s)
        expected = abs(phi.alpha[0]) ** weight * base.norm
        residual = abs(moved.norm - expected) / expected if expected > 0 else moved.norm
        rows.append([s, weight, _fmt(base.norm), _fmt(residual)])
        detail.append(
            {"s": s, "weight": weight, "norm": base.norm, "invariance_residual": residual}
        )
    _write_json(
        config.out.with_suffix(".json"),
        {"command": "wronskian", "k": config.k, "seed": config.seed, "orders": detail},
    )
    _write_csv(config.out.with_suffix(".csv"), ["s", "weight", "norm", "residual"], rows)
    return 0


def _cmd_invariants(config: RunConfig, scenario: BaseScenario) -> int:
    rng = np.random.default_rng(config.seed)
    jet = _random_jet(rng, config.k, scenario.r, lead_floor=0.2)
    phi = _random_reparam(rng, config.k)
    eta, numerators = jt.normalize_jet(jet)
    eta_moved, _ = jt.normalize_jet(jt.act(phi, jet))
    residual = float(np.max(np.abs(eta.xi - eta_moved.xi)))
    _write_json(
        config.out.with_suffix(".json"),
        {
            "command": "invariants",
            "k": config.k,
            "r": scenario.r,
            "seed": config.seed,
            "normalized": _matrix(eta.xi),
            "numerators": [_pair(p) for p in numerators],
            "invariance_residual": residual,
        },
    )
    _write_csv(
        config.out.with_suffix(".csv"),
        ["quantity", "value"],
        [["invariance_residual", _fmt(residual)]],
    )
    return 0


def _cmd_curvature(config: RunConfig, scenario: BaseScenario) -> int:
    rows = []
    detail = []
    for i, (weight, _) in enumerate(scenario.samples):
        eta = eta_form(scenario, i)
        sig = signature(eta)
        det = top_power(eta)
        rows.append([i, _fmt(weight), sig[0], sig[1], sig[2], _fmt(det)])
        detail.append(
            {
                "sample": i,
                "weight": weight,
                "signature": list(sig),
                "det": det,
                "eigenvalues": [float(v) for v in np.linalg.eigvalsh(eta.A)],
            }
        )
    value = ms.closed_form(scenario, config.k, config.q_mode)
    _write_json(
        config.out.with_suffix(".json"),
        {
            "command": "curvature",
            "k": config.k,
            "q_mode": str(config.q_mode),
            "delta": scenario.delta,
            "closed_form": value,
            "samples": detail,
        },
    )
    _write_csv(
        config.out.with_suffix(".csv"),
        ["sample", "weight", "n_neg", "n_zero", "n_pos", "det"],
        rows,
    )
    return 0


def _cmd_fd_check(config: RunConfig, scenario: BaseScenario) -> int:
    spec = mt.MetricSpec.auto(mt.MetricKind.GG, config.k, config.eps0)
    rng = np.random.default_rng(config.seed)
    rows = []
    worst = 0.0
    for i, (_, model) in enumerate(scenario.samples):
        jet = _random_jet(rng, config.k, scenario.r)
        deviation = mt.curvature_fd_check(spec, model, jet)
        worst = max(worst, deviation)
        rows.append([i, _fmt(deviation)])
    _write_json(
        config.out.with_suffix(".json"),
        {
            "command": "fd-check",
            "k": config.k,
            "seed": config.seed,
            "max_deviation": worst,
            "threshold": config.fd_threshold,
            "passed": worst <= config.fd_threshold,
        },
    )
    _write_csv(config.out.with_suffix(".csv"), ["sample", "deviation"], rows)
    print(f"fd-check max deviation {worst:.3e} (threshold {config.fd_threshold:.3e})")
    if worst > config.fd_threshold:
        print("fd-check failed", file=sys.stderr)
        return 3
    return 0


def _cmd_sympow(config: RunConfig, scenario: BaseScenario) -> int:
    rows = []
    detail = []
    r = scenario.r
    for i, (_, model) in enumerate(scenario.samples):
        trace = fiber_trace(model).A
        for l in range(1, config.l_max + 1):
            sym = sym_power_curvature(model, l)
            sym_trace = np.einsum("ijaa->ij", sym.C)
            expected = sym.dim * l / r * trace
            residual = float(np.max(np.abs(sym_trace - expected)))
            rows.append([i, l, sym.dim, _fmt(residual)])
            detail.append({"sample": i, "l": l, "dim": sym.dim, "trace_residual": residual})
    _write_json(
        config.out.with_suffix(".json"),
        {"command": "sympow", "l_max": config.l_max, "samples": detail},
    )
    _write_csv(config.out.with_suffix(".csv"), ["sample", "l", "dim", "trace_residual"], rows)
    return 0


def _cmd_morse(config: RunConfig, scenario: BaseScenario) -> int:
    spec = _metric_spec(config)
    estimate = ms.fiber_mc(spec, scenario, config.q_mode, config.samples, config.seed)
    v = ms.verdict(estimate)
    _write_csv(
        config.out.with_suffix(".csv"),
        ESTIMATE_COLUMNS,
        [_estimate_row(v, scenario.delta, config.seed)],
    )
    payload = _estimate_json(v)
    payload.update(
        {
            "command": "morse",
            "seed": config.seed,
            "delta": scenario.delta,
            "closed_form": ms.closed_form(scenario, spec.k, config.q_mode),
        }
    )
    _write_json(config.out.with_suffix(".json"), payload)
    return 0


def _cmd_delta_scan(config: RunConfig, scenario: BaseScenario) -> int:
    if not config.delta_grid:
        raise ValueError("delta-scan requires --delta-grid a:b:step")
    spec = _metric_spec(config)
    scan = ms.delta_scan(
        spec, scenario, config.delta_grid, config.samples, config.seed, config.q_mode
    )
    rows = [_estimate_row(v, d, config.seed) for d, v in scan.results]
    _write_csv(config.out.with_suffix(".csv"), ESTIMATE_COLUMNS, rows)
    _write_json(
        config.out.with_suffix(".json"),
        {
            "command": "delta-scan",
            "seed": config.seed,
            "delta_star": scan.delta_star,
            "log_k_over_k": scan.log_k_over_k,
            "grid": [d for d, _ in scan.results],
            "positive": [v.positive for _, v in scan.results],
        },
    )
    return 0


def _cmd_converge(config: RunConfig, scenario: BaseScenario) -> int:
    spec = _metric_spec(config)
    report = ms.convergence_diag(
        spec, scenario, config.q_mode, config.samples, config.batches, config.seed
    )
    # stderr column carries the batch-means standard error of the grand mean
    spread = float(report.batch_means.std(ddof=1)) / math.sqrt(report.batches)
    estimate = ms.MorseEstimate(
        q_mode=config.q_mode,
        mean=report.grand_mean,
        stderr=spread,
        samples=report.samples_used,
        k=spec.k,
        n=scenario.n,
        r=scenario.r,
        metric_kind=spec.kind,
    )
    v = ms.verdict(estimate)
    _write_csv(
        config.out.with_suffix(".csv"),
        ESTIMATE_COLUMNS,
        [_estimate_row(v, scenario.delta, config.seed)],
    )
    _write_json(
        config.out.with_suffix(".json"),
        {
            "command": "converge",
            "seed": config.seed,
            "metric_kind": spec.kind.value,
            "k": spec.k,
            "batches": report.batches,
            "samples_used": report.samples_used,
            "batch_means": [float(x) for x in report.batch_means],
            "grand_mean": report.grand_mean,
            "ci_half_width": report.ci_half_width,
            "ratio": report.ratio if math.isfinite(report.ratio) else None,
            "converged": report.converged,
        },
    )
    print(
        f"converge: {'converged' if report.converged else 'not converged'} "
        f"(CI half-width {report.ci_half_width:.4e}, ratio {report.ratio:.4f})"
    )
    return 0


def _cmd_report(config: RunConfig) -> int:
    if not config.inputs:
        raise ValueError("report requires --inputs CSV [CSV ...]")
    rows = []
    for path in config.inputs:
        with Path(path).open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            for record in reader:
                missing = [c for c in ESTIMATE_COLUMNS if c not in record]
                if missing:
                    raise ValueError(f"{path}: missing columns {missing}")
                rows.append(record)
    rows.sort(key=lambda rec: (rec["metric_kind"], int(rec["k"]), float(rec["delta"])))
    _write_csv(
        config.out.with_suffix(".csv"),
        ESTIMATE_COLUMNS,
        [[rec[c] for c in ESTIMATE_COLUMNS] for rec in rows],
    )
    plot_rows = [
        [
            rec["metric_kind"],
            rec["k"],
            rec["n"],
            rec["mean"],
            rec["stderr"],
            _fmt(mt.harmonic(int(rec["k"])) ** int(rec["n"])),
        ]
        for rec in rows
    ]
    plot_path = config.out.parent / (config.out.name + "_plot.csv")
    _write_csv(
        plot_path,
        ["metric_kind", "k", "n", "mean", "stderr", "harmonic_pow_n"],
        plot_rows,
    )
    _write_json(
        config.out.with_suffix(".json"),
        {"command": "report", "rows": len(rows), "inputs": [str(p) for p in config.inputs]},
    )
    return 0


# ---------------------------------------------------------------------------
# Dispatch.

def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        if config.command == "report":
            return _cmd_report(config)
        if config.scenario is None:
            raise ValueError(f"{config.command} requires --scenario FILE")
        scenario = parse_scenario(config.scenario)
        handler = {
            "act": _cmd_act,
            "wronskian": _cmd_wronskian,
            "invariants": _cmd_invariants,
            "curvature": _cmd_curvature,
            "fd-check": _cmd_fd_check,
            "sympow": _cmd_sympow,
            "morse": _cmd_morse,
            "delta-scan": _cmd_delta_scan,
            "converge": _cmd_converge,
        }[config.command]
        return handler(config, scenario)
    except (jt.DegenerateJetError, NumericalGuardError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    except (ScenarioFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(_config(args))


def console_main() -> None:
    sys.exit(main())
