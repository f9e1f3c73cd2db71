"""Command-line harness: sample, evaluate, bench-estimators, oracle-check.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import Experiment, load_experiment
from .datasets import load_graphs, save_graphs
from .errors import (
    ConfigurationError,
    NumericalDomainError,
    RewardEvaluationError,
    SamplingError,
    UndefinedMetricError,
)
from .guidance import ControllerConfig
from .metrics import (
    EvalReport,
    delta_mmd,
    observation_accuracy,
    pct_unique,
    val_c,
)
from .oracles import ORACLE_SUITES, _estimator_setup, estimator_stats, run_suite
from .rewards import (
    fairness_metrics,
    is_star,
    is_valid_egonet,
    quantize,
    sbm_valid,
)
from .sampler import batch_sample
from .state import GraphState

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        print(message)


def cmd_sample(args: argparse.Namespace) -> int:
    overrides = {"seed": args.seed, "n_chains": args.chains, "out": args.out}
    exp = load_experiment(args.config, overrides)
    out_dir = exp.out
    out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    batch = batch_sample(exp.prior, exp.reward, exp.sampler, exp.n_chains, exp.seed)
    elapsed = time.perf_counter() - start
    if batch.errors:
        for chain, message in sorted(batch.errors.items()):
            print(f"chain {chain} failed: {message}", file=sys.stderr)

    finals = [
        GraphState(t.final.node_features, quantize(t.final.adjacency))
        for t in batch.trajectories
        if t is not None
    ]
    if not finals:
        raise SamplingError("all chains failed")
    graphs_path = out_dir / "graphs.jsonl"
    save_graphs(graphs_path, finals)

    record = {
        "artifact_version": __version__,
        "config": exp.raw,
        "config_digest": exp.digest,
        "graphs_file": graphs_path.name,
        "n_chains": exp.n_chains,
        "n_failed": len(batch.errors),
        "chain_errors": {str(k): v for k, v in sorted(batch.errors.items())},
        "reward_evals_total": batch.reward_evals_total,
        "wall_clock_s": elapsed,
        "eval_report": None,
        "controller": exp.controller.kind if exp.controller else "none",
    }
    (out_dir / "result.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    _say(
        args.quiet,
        f"wrote {len(finals)} graphs to {graphs_path} "
        f"({batch.reward_evals_total} reward evals, {elapsed:.2f}s)",
    )
    return EXIT_OK


def _aux_counts(samples: list[GraphState]) -> dict:
    stars = [is_star(g.adjacency) for g in samples]
    egonets = [is_valid_egonet(g.adjacency) for g in samples]
    # Excess edges over a star: edges not incident to the max-degree hub.
    excess = []
    for g in samples:
        a = g.adjacency
        if a.shape[0] == 1:
            excess.append(0.0)
            continue
        deg = a.sum(axis=1)
        excess.append(float(a.sum() / 2.0 - deg.max()))
    return {
        "pct_stars": float(np.mean(stars)),
        "pct_valid_egonets": float(np.mean(egonets)),
        "edges_over_star_mean": float(np.mean(excess)),
        "edges_over_star_std": float(np.std(excess)),
    }


def evaluate_samples(
    exp: Experiment,
    samples: list[GraphState],
    reference: list[GraphState],
    unconstrained: list[GraphState] | None,
) -> EvalReport:
    spec = exp.constraint
    report_val_c = val_c(samples, spec) if spec is not None else None

    delta_by_stat = {}
    delta = None
    if unconstrained is not None:
        for stat in ("degree", "clustering"):
            delta_by_stat[stat] = delta_mmd(reference, unconstrained, samples, stat)
        delta = float(np.mean(list(delta_by_stat.values())))

    accuracy = None
    if spec is not None and spec.kind == "link_observation":
        accuracy = observation_accuracy(samples, spec.aux, spec.mode)

    fairness_summary = None
    aux = _aux_counts(samples)
    if spec is not None and spec.kind == "fairness":
        dps = np.array([fairness_metrics(g.adjacency, spec.aux) for g in samples])
        fairness_summary = {
            "delta_dp_mean": float(dps[:, 0].mean()),
            "delta_dp_std": float(dps[:, 0].std()),
            "delta_dp_node_mean": float(dps[:, 1].mean()),
            "delta_dp_node_std": float(dps[:, 1].std()),
        }
        aux["pct_valid_sbm"] = float(
            np.mean([sbm_valid(g.adjacency, spec.aux) for g in samples])
        )

    return EvalReport(
        val_c=report_val_c,
        delta_mmd=delta,
        delta_mmd_by_stat=delta_by_stat,
        accuracy=accuracy,
        pct_unique=pct_unique(samples, reference),
        fairness_summary=fairness_summary,
        aux_counts=aux,
    )


def _flat_rows(report: EvalReport) -> list[tuple[str, float]]:
    rows = []
    data = report.to_dict()
    for key in ("val_c", "delta_mmd", "accuracy", "pct_unique"):
        if data[key] is not None:
            rows.append((key, data[key]))
    for stat, value in data["delta_mmd_by_stat"].items():
        rows.append((f"delta_mmd_{stat}", value))
    if data["fairness_summary"]:
        rows.extend(sorted(data["fairness_summary"].items()))
    rows.extend(sorted(data["aux_counts"].items()))
    return rows


def cmd_evaluate(args: argparse.Namespace) -> int:
    exp = load_experiment(args.config, {"seed": args.seed})
    samples = load_graphs(args.samples)
    reference = load_graphs(args.reference)
    unconstrained = load_graphs(args.unconstrained) if args.unconstrained else None

    report = evaluate_samples(exp, samples, reference, unconstrained)
    out_path = Path(args.out) if args.out else Path(args.samples).parent / "report.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    payload["config_digest"] = exp.digest
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    for name, value in _flat_rows(report):
        _say(args.quiet, f"{name}\t{value:.6f}")
    _say(args.quiet, f"report written to {out_path}")
    return EXIT_OK


def cmd_bench_estimators(args: argparse.Namespace) -> int:
    model, reward, g, t, reference = _estimator_setup(args.seed)
    base = ControllerConfig(kind="two_point", mu_rule="constant", mu0=1e-2)
    evals_per_sample = {"one_point": 1, "two_point": 2, "best_of_n": args.candidates,
                        "multi_point": args.candidates + 1}
    _say(args.quiet, f"{'estimator':<14}{'cosine':>10}{'variance':>14}{'evals/sample':>14}")
    for kind in ("one_point", "two_point", "best_of_n", "multi_point"):
        stats = estimator_stats(
            kind, reward, model, g, t,
            replace(base, n_candidates=args.candidates),
            args.samples, args.seed, reference,
        )
        _say(
            args.quiet,
            f"{kind:<14}{stats.cosine_to_reference:>10.4f}"
            f"{stats.empirical_variance:>14.4e}{evals_per_sample[kind]:>14d}",
        )
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace) -> int:
    results = run_suite(args.suite)
    all_ok = True
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name}: {result.detail}")
        all_ok &= result.passed
    return EXIT_OK if all_ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphsteer",
        description="Reward-steered graph diffusion sampling",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="run guided sampling chains")
    p_sample.add_argument("--config", required=True)
    p_sample.add_argument("--seed", type=int, default=None, help="override config seed")
    p_sample.add_argument("--chains", type=int, default=None, help="override n_chains")
    p_sample.add_argument("--out", default=None, help="override output directory")
    p_sample.add_argument("--quiet", action="store_true")
    p_sample.set_defaults(func=cmd_sample)

    p_eval = sub.add_parser("evaluate", help="evaluate generated graphs")
    p_eval.add_argument("--config", required=True, help="config with the constraint spec")
    p_eval.add_argument("--samples", required=True, help="graphs.jsonl to evaluate")
    p_eval.add_argument("--reference", required=True, help="reference dataset (jsonl)")
    p_eval.add_argument("--unconstrained", default=None, help="unguided samples (jsonl)")
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--out", default=None, help="report path (json)")
    p_eval.add_argument("--quiet", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench-estimators", help="benchmark the ZO estimators")
    p_bench.add_argument("--samples", type=int, default=20_000)
    p_bench.add_argument("--candidates", type=int, default=8)
    p_bench.add_argument("--seed", type=int, default=7)
    p_bench.add_argument("--quiet", action="store_true")
    p_bench.set_defaults(func=cmd_bench_estimators)

    p_oracle = sub.add_parser("oracle-check", help="run an oracle verification suite")
    p_oracle.add_argument("suite", choices=sorted(ORACLE_SUITES))
    p_oracle.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDomainError, RewardEvaluationError, SamplingError, UndefinedMetricError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
