"""Command-line front end: every experiment is a seeded subcommand.

Exit codes: 0 success, 1 domain/contract errors, 2 usage errors.  Each run
writes a ``run_manifest.json`` next to its outputs (atomically, tmp+rename)
recording the subcommand, the fully resolved arguments (defaults included),
the tool version, the produced files and the wall time.  Output CSVs use '.'
decimals, '\\n' newlines and always carry a header row; JSON is emitted with
sorted keys so reruns diff cleanly.  No environment variables are consulted;
output is plain text, so NO_COLOR holds trivially.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import gof
from .distributions import DistSpec, Family, SampleBatch
from .errors import BelldistError
from .gumbel_algebra import kl_bound
from .losses import LN4, LossConfig, l_loss, mse_loss
from .mdp import TabularMdp, example1_row_errors, make_chain, make_example1, make_random_dag
from .normal_max import normal_max_gumbel
from .order_stats import sampling_error
from .scaling import RewardSample, scaling_curve
from .training import TrainConfig, compare_losses, run_training


def _write_manifest(out_dir: Path, subcommand: str, args: argparse.Namespace,
                    outputs: list[str], started: float) -> None:
    manifest = {
        "subcommand": subcommand,
        "argv": sys.argv[1:],
        "args": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": sorted(outputs),
        "wall_time_s": time.monotonic() - started,
    }
    tmp = out_dir / "run_manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
    os.replace(tmp, out_dir / "run_manifest.json")


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def parse_env(spec: str, seed: int) -> TabularMdp:
    """'example1' | 'chain:N' | 'dag:S,A' | a path to an MDP JSON file."""
    if spec == "example1":
        return make_example1()
    if spec.startswith("chain:"):
        return make_chain(int(spec.split(":", 1)[1]))
    if spec.startswith("dag:"):
        s, a = spec.split(":", 1)[1].split(",")
        return make_random_dag(int(s), int(a), seed=seed)
    if spec.endswith(".json"):
        return TabularMdp.from_json(Path(spec).read_text())
    raise BelldistError(f"unknown environment spec {spec!r}")


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, steps = text.split(":")
        return np.linspace(float(lo), float(hi), int(steps))
    except ValueError as exc:
        raise BelldistError(f"grid must be lo:hi:steps, got {text!r}") from exc


# ---------------------------------------------------------------------------
# Subcommand handlers (each returns the list of files it wrote)
# ---------------------------------------------------------------------------

def cmd_example1(args) -> list[str]:
    out = _out_dir(args)
    init = DistSpec(Family(args.init), 0.0, 1.0)
    outputs = []
    for t in range(1, args.iters + 1):
        snap = example1_row_errors(t, seed=args.seed, init=init)
        csv_path = out / f"errors_t{t}.csv"
        snap.to_csv(csv_path)
        outputs.append(str(csv_path))
        fits = {
            "eps_gap": [r.to_dict() for r in gof.rank_families(SampleBatch(snap.eps_gap_flat))],
            "bellman_err": [r.to_dict() for r in gof.rank_families(SampleBatch(snap.bellman_err_flat))],
        }
        json_path = out / f"fits_t{t}.json"
        json_path.write_text(json.dumps(fits, sort_keys=True, indent=2) + "\n")
        outputs.append(str(json_path))
    print(f"wrote {len(outputs)} files to {out}")
    return outputs


def cmd_fit(args) -> list[str]:
    out = _out_dir(args)
    data = SampleBatch.from_csv(args.input)
    bins = args.bins if args.bins == "fd" else int(args.bins)
    reports = gof.rank_families(data, n_bins=bins, ks_mode=args.ks_mode)
    outputs = []
    if args.format in ("json", "both"):
        path = out / "fit_reports.json"
        path.write_text(gof.reports_to_json(reports) + "\n")
        outputs.append(str(path))
    if args.format in ("csv", "both"):
        path = out / "fit_summary.csv"
        _write_csv(
            path,
            ["family", "r2", "sse", "rmse", "ks", "location", "scale", "n_bins", "n_samples"],
            [
                (r.family.value, r.r2, r.sse, r.rmse, r.ks, r.params.location,
                 r.params.scale, r.n_bins, r.n_samples)
                for r in reports
            ],
        )
        outputs.append(str(path))
    print(gof.reports_to_json(reports))
    return outputs


def cmd_klbound(args) -> list[str]:
    out = _out_dir(args)
    report = kl_bound(args.astar, args.gamma)
    path = out / "klbound.json"
    path.write_text(report.to_json() + "\n")
    print(report.to_json())
    return [str(path)]


def cmd_normal_max(args) -> list[str]:
    out = _out_dir(args)
    params = normal_max_gumbel(args.n)
    payload = json.loads(params.to_json())
    if args.mc:
        from scipy.special import ndtri

        from .distributions import uniform_open
        from .gof import ks_statistic

        if params.a_n > 0:
            u = uniform_open(args.seed, args.mc)
            draws = -ndtri(-np.expm1(np.log(u) / float(args.n)))
            ks = ks_statistic(SampleBatch(draws), DistSpec(Family.GUMBEL, params.b_n, params.a_n))
            payload["mc"] = {"replicates": args.mc, "seed": args.seed, "ks": ks}
        else:
            # the correction series degrades below n ~ 90 and can return a
            # non-positive scale; there is no law to test against
            payload["mc"] = {
                "replicates": args.mc,
                "seed": args.seed,
                "ks": None,
                "note": "scale is non-positive at this n; approximation invalid",
            }
    text = json.dumps(payload, sort_keys=True, indent=2)
    path = out / "normal_max.json"
    path.write_text(text + "\n")
    print(text)
    return [str(path)]


def cmd_sampling_error(args) -> list[str]:
    out = _out_dir(args)
    sizes = [int(x) for x in args.n.split(",")]
    rows = [(n, sampling_error(n, args.a, args.b).s_e) for n in sizes]
    path = out / "sampling_error.csv"
    _write_csv(path, ["n", "s_e"], rows)
    for n, se in rows:
        print(f"{n},{se:.6e}")
    return [str(path)]


def cmd_scaling(args) -> list[str]:
    out = _out_dir(args)
    rewards = SampleBatch.from_csv(args.rewards).values
    sample = RewardSample(rewards, args.beta)
    grid = _parse_grid(args.phi_grid)
    curve = scaling_curve(sample, grid)
    csv_path = out / "scaling_curve.csv"
    _write_csv(
        csv_path,
        ["phi", "expected_error", "below_regime"],
        [
            (float(p), float(e), int(b))
            for p, e, b in zip(curve.phi_grid, curve.expectations, curve.below_regime)
        ],
    )
    summary = {
        "cond1": curve.cond1,
        "cond2": curve.cond2,
        "phi_star": curve.phi_star,
        "beta": args.beta,
    }
    json_path = out / "scaling_summary.json"
    json_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return [str(csv_path), str(json_path)]


def cmd_losscheck(args) -> list[str]:
    out = _out_dir(args)
    grid = _parse_grid(args.t_grid)
    cfg = LossConfig(sigma=1.0)
    rows = []
    for t in grid:
        ll = l_loss(np.array([t]), cfg)
        mse_plus = LN4 + 0.5 * mse_loss(np.array([t]))
        rows.append((float(t), ll, mse_plus, abs(ll - mse_plus)))
    path = out / "losscheck.csv"
    _write_csv(path, ["t", "lloss", "mse_plus_ln4", "gap"], rows)
    print(f"wrote {path}")
    return [str(path)]


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        loss=args.loss,
        sigma=args.sigma,
        batch_size=args.batch_size,
        lr=args.lr,
        tau=args.tau,
        reward_scale=args.reward_scale,
        epochs=args.epochs,
        approximator=args.approximator,
        seed=args.seed,
    )


def cmd_train(args) -> list[str]:
    out = _out_dir(args)
    env = parse_env(args.env, seed=args.seed)
    log = run_training(env, _train_config(args))
    outputs = []
    curve = out / "reward_curve.csv"
    _write_csv(curve, ["epoch", "reward"], list(enumerate(map(float, log.rewards))))
    outputs.append(str(curve))
    for epoch, errs in enumerate(log.bellman_errors):
        if errs.size:
            path = out / f"bellman_errors_epoch{epoch}.csv"
            SampleBatch(errs).to_csv(path)
            outputs.append(str(path))
    policy_path = out / "policy.json"
    policy_path.write_text(
        json.dumps({"greedy_policy": log.final_policy.tolist(),
                    "epochs_run": log.epochs_run}, sort_keys=True) + "\n"
    )
    outputs.append(str(policy_path))
    print(f"trained {log.epochs_run} epochs; final return {log.rewards[-1]}")
    return outputs


def cmd_compare(args) -> list[str]:
    out = _out_dir(args)
    env = parse_env(args.env, seed=args.seed)
    seeds = [int(s) for s in args.seeds.split(",")]
    base = _train_config(args)
    result = compare_losses(env, base, seeds)
    payload = {
        "per_seed_mse": result.per_seed_mse.tolist(),
        "per_seed_lloss": result.per_seed_lloss.tolist(),
        "mean_mse": result.mean_mse,
        "mean_lloss": result.mean_lloss,
        "enhancement": result.enhancement,
        "logistic_vs_normal_wins": result.logistic_vs_normal_wins,
        "comparisons": result.comparisons,
    }
    path = out / "comparison.json"
    text = json.dumps(payload, sort_keys=True, indent=2)
    path.write_text(text + "\n")
    print(text)
    return [str(path)]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--env", required=True, help="example1 | chain:N | dag:S,A | path.json")
    p.add_argument("--loss", choices=["mse", "lloss"], default="mse")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--tau", type=float, default=0.005)
    p.add_argument("--reward-scale", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--approximator", choices=["tabular", "mlp"], default="tabular")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="belldist",
        description="Seeded experiments over Gumbel/Logistic error distributions of Q-iteration",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("example1", help="error rows of the five-state benchmark + family fits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=4)
    p.add_argument("--init", choices=["normal", "gumbel"], default="normal")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_example1)

    p = sub.add_parser("fit", help="fit all three families to a value CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity; output is deterministic")
    p.add_argument("--bins", default="50")
    p.add_argument("--ks-mode", choices=[gof.KS_TWO_SIDED, gof.KS_ONE_SIDED],
                   default=gof.KS_TWO_SIDED)
    p.add_argument("--format", choices=["json", "csv", "both"], default="both")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("klbound", help="discount-mismatch KL bound and numeric KL")
    p.add_argument("--astar", type=float, required=True)
    p.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity; output is deterministic")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_klbound)

    p = sub.add_parser("normal-max", help="Gumbel approximation of max of N Normals")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo replicates for a KS check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_normal_max)

    p = sub.add_parser("sampling-error", help="expected-empirical-CDF sampling error per batch size")
    p.add_argument("--n", required=True, help="comma-separated batch sizes")
    p.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity; output is deterministic")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_sampling_error)

    p = sub.add_parser("scaling", help="expected error along a reward-scaling grid")
    p.add_argument("--rewards", required=True, help="single-column CSV of rewards")
    p.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity; output is deterministic")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--phi-grid", default="1:3:41")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("losscheck", help="Logistic loss vs log4 + mse/2 along a grid")
    p.add_argument("--t-grid", default="-0.5:0.5:101")
    p.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity; output is deterministic")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_losscheck)

    p = sub.add_parser("train", help="one training run")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="mse vs lloss arms over seeds")
    _add_train_flags(p)
    p.add_argument("--seeds", default="0,1")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        outputs = args.func(args)
    except BelldistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_manifest(_out_dir(args), args.subcommand, args, outputs, started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
