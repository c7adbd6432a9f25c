"""Command-line surface.

Subcommands: evaluate (trajectory metrics for one run), characterize
(difficulty decision tree from a catalog), cluster (k-means++ run
categories, optionally chained into a category decision tree), play
(time-dilated playback of a frame list against a synthetic estimator),
profile (aggregate component timings from run logs), and report
(result tables from per-run records).

Exit codes: 0 on success, 1 on usage or input errors, 2 when evaluate
classifies the run as a failure. Report-style commands write delimited
output plus rendered figures (disable with --no-figures).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import catalog as cat
from . import dtree, metrics, perfcluster, playback, refdata, report, traj_io
from .errors import EmptyTrajectory, VobenchError

FORMATS = {
    "tum": traj_io.parse_tum,
    "kitti": traj_io.parse_kitti,
    "euroc": traj_io.parse_euroc_gt,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (VobenchError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vobench",
        description="Benchmark characterization and evaluation workbench for VO/SLAM.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="trajectory accuracy metrics for one run")
    p.add_argument("--est", required=True, help="estimated trajectory file")
    p.add_argument("--est-format", choices=sorted(FORMATS), default="tum")
    p.add_argument("--gt", required=True, help="ground-truth trajectory file")
    p.add_argument("--gt-format", choices=sorted(FORMATS), default="tum")
    p.add_argument("--est-times", help="timestamp file for a KITTI-format estimate")
    p.add_argument("--gt-times", help="timestamp file for KITTI-format ground truth")
    p.add_argument("--kitti-rate", type=float, default=10.0,
                   help="frame rate assumed when a KITTI times file is absent")
    p.add_argument("--align", choices=[a.value for a in metrics.Alignment], default="se3")
    p.add_argument("--rpe-delta", type=float, default=1.0, help="RPE interval (s)")
    p.add_argument("--max-diff", type=float, default=traj_io.DEFAULT_MAX_DIFF,
                   help="association tolerance (s)")
    p.add_argument("--sequence", default=None, help="sequence label for the record")
    p.add_argument("--algorithm", default="est", help="algorithm label for the record")
    p.add_argument("--speed", default="normal", help="speed label for the record")
    p.add_argument("--run-id", type=int, default=0)
    p.add_argument("--out", help="write the run record as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("characterize", help="difficulty decision tree from a catalog")
    p.add_argument("--catalog", help="catalog CSV (default: bundled 12-sequence table)")
    p.add_argument("--label", default="difficulty",
                   help="label column; clustered categories are reached via "
                        "'cluster --characterize'")
    p.add_argument("--filter", choices=["all", "indoor", "outdoor"], default="all")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--dot", help="write the tree in DOT format")
    p.add_argument("--summary", help="write a JSON training summary")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("cluster", help="cluster run outcomes into performance categories")
    p.add_argument("--runs", required=True, help="observation CSV (sequence,algorithm,run_id,loss_rate,raw_err)")
    p.add_argument("--k", type=int, default=None, help="cluster count (default 4; 3 with --aggregate)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm", default=None, help="only cluster one algorithm's runs")
    p.add_argument("--aggregate", action="store_true",
                   help="three-category protocol over the full observation set")
    p.add_argument("--out", default="clusters.csv", help="clustered observation CSV")
    p.add_argument("--characterize", action="store_true",
                   help="train a decision tree on the categories (revisit frequency excluded)")
    p.add_argument("--catalog", help="catalog CSV for predictors (default: bundled table)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--dot", default="tree.dot", help="DOT output when chaining")
    p.add_argument("--summary", help="write a JSON summary")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("play", help="replay a frame list against a synthetic estimator")
    p.add_argument("--frames", required=True, help="frame CSV (index,t_source)")
    p.add_argument("--estimator", required=True, help="estimator spec JSON")
    p.add_argument("--rate", type=float, default=1.0,
                   help=f"rate factor; {playback.SLOMO_RATE} is slow motion")
    p.add_argument("--mode", choices=["drop", "every"], default="drop")
    p.add_argument("--clock", choices=["virtual", "wall"], default="virtual")
    p.add_argument("--seed", type=int, default=None,
                   help="override the estimator spec's RNG seed")
    p.add_argument("--out", default="runlog.json", help="run log output")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("profile", help="aggregate component timings from run logs")
    p.add_argument("--log", action="append", required=True, help="run log JSON (repeatable)")
    p.add_argument("--out", default="profile.csv")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("report", help="result tables from per-run records")
    p.add_argument("--results", required=True,
                   help="record CSV/JSON file or a directory of them")
    p.add_argument("--out", default="report.csv")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def _load_trajectory(path: str, fmt: str, times: str | None, rate: float):
    text = Path(path).read_text()
    if fmt == "kitti":
        times_text = Path(times).read_text() if times else None
        return traj_io.parse_kitti(text, times_text, default_rate_hz=rate)
    return FORMATS[fmt](text)


def cmd_evaluate(args) -> int:
    gt = _load_trajectory(args.gt, args.gt_format, args.gt_times, args.kitti_rate)
    try:
        est = _load_trajectory(args.est, args.est_format, args.est_times, args.kitti_rate)
    except EmptyTrajectory:
        est = None  # an estimator that produced nothing: a lost run, not an input error

    config = metrics.EvalConfig(
        max_diff=args.max_diff,
        align=metrics.Alignment(args.align),
        rpe_delta=args.rpe_delta,
    )
    result = metrics.run_result(est, gt, config)
    sequence = args.sequence if args.sequence is not None else Path(args.est).stem
    record = report.RunRecord.from_result(
        result, sequence=sequence, algorithm=args.algorithm,
        speed=args.speed, run_id=args.run_id,
    )

    def fmt(v):
        return "-" if v is None else f"{v:.6g}"

    print(f"sequence:   {record.sequence}")
    print(f"algorithm:  {record.algorithm}")
    print(f"status:     {result.status.value}")
    print(f"loss_rate:  {result.loss_rate:.6g}")
    print(f"rmse_m:     {fmt(result.rmse_m)}")
    print(f"rpe_mps:    {fmt(result.rpe_mps)}")
    print(f"n_matched:  {result.n_matched}")
    if args.out:
        Path(args.out).write_text(record.to_json())
    return 0 if result.status is metrics.RunStatus.SUCCESS else 2


def _load_catalog(path: str | None):
    if path is None:
        return refdata.load_table1()
    return cat.parse_catalog(Path(path).read_text())


def cmd_characterize(args) -> int:
    if args.label != "difficulty":
        raise ValueError(
            f"unsupported label column {args.label!r}; categories come from "
            "'cluster --characterize'"
        )
    records = _load_catalog(args.catalog)
    if args.filter != "all":
        wanted = cat.Scene.INDOOR if args.filter == "indoor" else cat.Scene.OUTDOOR
        records = [r for r in records if r.scene == wanted]
    data = dtree.dataset_from_catalog(records)
    params = dtree.FitParams(
        max_depth=args.max_depth, min_leaf=args.min_leaf, rng_seed=args.seed,
    )
    tree, accuracy = dtree.cross_validate_fit(data, folds=args.folds, params=params)
    print(f"rows:      {len(data.rows)} ({args.filter})")
    print(f"accuracy:  {accuracy:.6g} (full pool, best of {args.folds} folds)")
    if args.dot:
        Path(args.dot).write_text(dtree.export_dot(tree))
        print(f"tree:      {args.dot}")
    if args.summary:
        summary = {
            "filter": args.filter,
            "rows": len(data.rows),
            "folds": args.folds,
            "seed": args.seed,
            "full_pool_accuracy": accuracy,
            "dot": args.dot,
        }
        Path(args.summary).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_cluster(args) -> int:
    k = args.k
    if args.aggregate:
        if k is None:
            k = 3
        elif k != 3:
            raise ValueError("--aggregate uses the three-category protocol (k=3)")
    elif k is None:
        k = 4

    rows = perfcluster.parse_observation_rows(Path(args.runs).read_text())
    if args.algorithm is not None:
        rows = [r for r in rows if r["algorithm"] == args.algorithm]
    observations = perfcluster.build_observations(rows)
    points = [obs.point for obs in observations]
    clustering = perfcluster.kmeanspp(points, k=k, seed=args.seed)
    clustering = perfcluster.with_categories(clustering)

    out_path = Path(args.out)
    out_path.write_text(perfcluster.write_clustered_csv(observations, clustering))
    present = sorted(
        {clustering.categories[c].value for c in set(clustering.assignment)}
    )
    print(f"observations: {len(observations)}")
    print(f"k:            {k} (sse {clustering.sse_history[-1]:.6g})")
    print(f"categories:   {', '.join(present)}")
    print(f"clusters:     {out_path}")

    summary = {
        "k": k,
        "seed": args.seed,
        "observations": len(observations),
        "sse": clustering.sse_history[-1],
        "centroids": [list(c) for c in clustering.centroids],
        "categories": {
            str(i): clustering.categories[i].value for i in range(k)
        },
    }

    if not args.no_figures:
        figure_path = out_path.with_suffix(".png")
        from . import plots

        plots.save_cluster_figure(observations, clustering, figure_path)
        print(f"figure:       {figure_path}")

    if args.characterize:
        records = _load_catalog(args.catalog)
        data = perfcluster.observation_dataset(observations, clustering, records)
        params = dtree.FitParams(
            max_depth=args.max_depth, min_leaf=args.min_leaf, rng_seed=args.seed,
        )
        tree, accuracy = dtree.cross_validate_fit(data, folds=args.folds, params=params)
        Path(args.dot).write_text(dtree.export_dot(tree))
        print(f"accuracy:     {accuracy:.6g} (categories over sequence properties)")
        print(f"tree:         {args.dot}")
        summary["full_pool_accuracy"] = accuracy
        summary["dot"] = args.dot

    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_play(args) -> int:
    frames = playback.parse_frames_csv(Path(args.frames).read_text())
    spec = playback.SyntheticEstimatorSpec.from_json(Path(args.estimator).read_text())
    if args.seed is not None:
        spec = playback.SyntheticEstimatorSpec(
            components=spec.components,
            tracked_probability=spec.tracked_probability,
            seed=args.seed,
            realtime=spec.realtime,
        )
    config = playback.PlaybackConfig(
        rate_factor=args.rate,
        mode=(playback.PlaybackMode.REALTIME_DROP if args.mode == "drop"
              else playback.PlaybackMode.EVERY_FRAME),
        clock=(playback.ClockMode.VIRTUAL if args.clock == "virtual"
               else playback.ClockMode.WALL),
    )
    log = playback.run(frames, playback.synthetic_estimator(spec), config)
    Path(args.out).write_text(playback.runlog_to_json(log))
    tracked = sum(1 for v in log.tracked.values() if v)
    print(f"frames:    {len(frames)}")
    print(f"delivered: {len(log.delivered)} ({tracked} tracked)")
    print(f"dropped:   {len(log.dropped)}")
    print(f"log:       {args.out}")
    return 0


def cmd_profile(args) -> int:
    logs = [playback.runlog_from_json(Path(p).read_text()) for p in args.log]
    profile = playback.aggregate_profile(logs)
    out_path = Path(args.out)
    out_path.write_text(playback.write_profile_csv(profile))
    width = max(len(n) for n in profile)
    for name in sorted(profile):
        stats = profile[name]
        print(f"{name.ljust(width)}  n={stats.count:<6d} mean={stats.mean_s * 1e3:.3f} ms")
    print(f"profile: {out_path}")
    if not args.no_figures:
        figure_path = out_path.with_suffix(".png")
        from . import plots

        plots.save_profile_figure(profile, figure_path)
        print(f"figure:  {figure_path}")
    return 0


def cmd_report(args) -> int:
    records = report.load_records(args.results)
    tables = report.build_tables(records)
    out_path = Path(args.out)
    out_path.write_text(report.write_report_csv(tables))
    print(report.render_text(tables), end="")
    print(f"report: {out_path}")
    if not args.no_figures:
        from . import plots

        for table in tables:
            figure_path = out_path.with_name(
                f"{out_path.stem}_{table.metric}_{table.speed}.png"
            )
            plots.save_report_figure(table, figure_path)
            print(f"figure: {figure_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
