"""Command-line interface: batch scoring, streaming, density reports, experiments.

Exit codes: 0 success, 2 malformed input (reported with a line number where
possible), 3 invalid configuration, 4 internal invariant violation. Output
files start with ``# key=value`` metadata lines (or carry a metadata object
in JSON mode) so a run can be reproduced from its artifact; given the same
seed and configuration the bytes are identical regardless of --threads.

Axes are reported 1-based here to match common usage; the library itself is
0-based.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bench import (
    auc_vs_tree_size,
    convergence_gap,
    detection_count_vs_iterations,
    gen_clusters_with_noise,
    gen_shifted_clusters,
    gen_sine_anomaly,
    ten_point_dataset,
    LabeledDataset,
)
from .dataset import Dataset
from .density import DensityParams, bad_split_measure, density_measure, density_measure_1d, interval_radius
from .ensemble import BaggingConfig, avg_anomaly_score, avg_codisp, bagged_forest
from .stream import stream_codisp_iter
from .tree import AlgorithmKind


class InputError(Exception):
    """Malformed or missing input data (exit 2)."""


class ConfigError(Exception):
    """Invalid flag combination or parameter (exit 3)."""


class _Parser(argparse.ArgumentParser):
    # argparse would exit(2) on its own; route flag problems to exit 3 instead
    def error(self, message):
        raise ConfigError(message)


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("CUTFOREST_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"CUTFOREST_SEED must be an integer, got {env!r}")
    return int(np.random.SeedSequence().entropy % (2**63))


def _algorithm(name: str) -> AlgorithmKind:
    try:
        return AlgorithmKind(name)
    except ValueError:
        raise ConfigError(f"unknown algorithm {name!r}; pick one of if, wif, rrcf, wrcf")


def _check_alpha(kind: AlgorithmKind, alpha: int) -> None:
    if kind.density_aware and alpha < 2:
        raise ConfigError(f"{kind.value} needs alpha >= 2, got {alpha}")


def _open_input(path):
    if path is None or path == "-":
        return sys.stdin
    try:
        return open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open input {path!r}: {exc}")


def read_points_csv(path):
    """Parse a CSV of coordinates with an optional header and 'label' column.

    Returns (points array, labels array or None). Raises InputError with the
    offending line number on malformed cells.
    """
    fp = _open_input(path)
    close = fp is not sys.stdin
    try:
        rows = []
        label_col = None
        header_seen = False
        for lineno, raw in enumerate(fp, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if not rows and not header_seen:
                try:
                    [float(c) for c in cells]
                except ValueError:
                    header_seen = True
                    lowered = [c.lower() for c in cells]
                    if "label" in lowered:
                        label_col = lowered.index("label")
                    continue
            try:
                values = [float(c) for c in cells]
            except ValueError as exc:
                raise InputError(f"line {lineno}: {exc}")
            rows.append(values)
        if not rows:
            raise InputError("input contains no data rows")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise InputError(f"line with {len(row)} cells; expected {width}")
        arr = np.asarray(rows, dtype=float)
        labels = None
        if label_col is not None:
            labels = arr[:, label_col].astype(np.int64)
            arr = np.delete(arr, label_col, axis=1)
        return arr, labels
    finally:
        if close:
            fp.close()


def read_series(path):
    """Parse one scalar per line; blank and comment lines are skipped."""
    fp = _open_input(path)
    close = fp is not sys.stdin
    try:
        values = []
        for lineno, raw in enumerate(fp, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise InputError(f"line {lineno}: not a number: {line!r}")
        if not values:
            raise InputError("input contains no values")
        return np.asarray(values)
    finally:
        if close:
            fp.close()


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_metadata_csv(fp, meta: dict) -> None:
    for key in sorted(meta):
        fp.write(f"# {key}={meta[key]}\n")


def _emit_rows(args, meta: dict, fieldnames, rows) -> None:
    fp, close = _open_output(args.output)
    try:
        if args.format == "json":
            json.dump({"metadata": meta, "rows": list(rows)}, fp, indent=2, sort_keys=True)
            fp.write("\n")
        else:
            _write_metadata_csv(fp, meta)
            fp.write(",".join(fieldnames) + "\n")
            for row in rows:
                fp.write(",".join("" if row[k] is None else str(row[k]) for k in fieldnames) + "\n")
    finally:
        if close:
            fp.close()


def _base_meta(args, seed: int, **extra) -> dict:
    meta = {"seed": seed, "version": __version__}
    meta.update(extra)
    return meta


# -- subcommands -----------------------------------------------------------------


def cmd_score(args) -> int:
    kind = _algorithm(args.algorithm)
    _check_alpha(kind, args.alpha)
    if args.iterations < 1:
        raise ConfigError(f"--iterations must be >= 1, got {args.iterations}")
    seed = _resolve_seed(args.seed)
    points, _ = read_points_csv(args.input)
    data = Dataset(points)
    if args.sample_size is not None and not 1 <= args.sample_size <= len(data):
        raise ConfigError(
            f"--sample-size must be in 1..{len(data)}, got {args.sample_size}"
        )
    cfg = BaggingConfig(kind=kind, sample_size=args.sample_size,
                        iterations=args.iterations, alpha=args.alpha, seed=seed)
    forest = bagged_forest(data, cfg, threads=args.threads)
    report = avg_codisp(forest) if kind.codisp_family else avg_anomaly_score(forest)
    fp, close = _open_output(args.output)
    try:
        if args.format == "json":
            report.to_json(fp)
        else:
            report.to_csv(fp)
    finally:
        if close:
            fp.close()
    return 0


def cmd_stream(args) -> int:
    kind = _algorithm(args.algorithm)
    if not kind.codisp_family:
        raise ConfigError("stream mode needs --algorithm rrcf or wrcf")
    _check_alpha(kind, args.alpha)
    seed = _resolve_seed(args.seed)
    series = read_series(args.input)
    n = len(series)
    if not 1 <= args.shingle <= n:
        raise ConfigError(f"--shingle must be in 1..{n}, got {args.shingle}")
    n_sh = n - args.shingle + 1
    if not 1 <= args.window <= n_sh:
        raise ConfigError(
            f"--window must be in 1..{n_sh} for {n_sh} shingles, got {args.window}"
        )
    if args.forest_size < 1:
        raise ConfigError(f"--forest-size must be >= 1, got {args.forest_size}")
    meta = _base_meta(args, seed, algorithm=kind.value, shingle=args.shingle,
                      window=args.window, forest_size=args.forest_size)
    if kind.density_aware:
        meta["alpha"] = args.alpha
    fp, close = _open_output(args.output)
    try:
        if args.format == "json":
            rows = [
                {"t": j + 1, "codisp": score}
                for j, score in stream_codisp_iter(series, args.shingle, args.window,
                                                   args.forest_size, kind=kind,
                                                   alpha=args.alpha, seed=seed)
            ]
            json.dump({"metadata": meta, "rows": rows}, fp, indent=2, sort_keys=True)
            fp.write("\n")
        else:
            _write_metadata_csv(fp, meta)
            fp.write("t,codisp\n")
            for j, score in stream_codisp_iter(series, args.shingle, args.window,
                                               args.forest_size, kind=kind,
                                               alpha=args.alpha, seed=seed):
                fp.write(f"{j + 1},{score!r}\n")
                fp.flush()
    finally:
        if close:
            fp.close()
    return 0


def cmd_density(args) -> int:
    if args.alpha < 2:
        raise ConfigError(f"--alpha must be >= 2, got {args.alpha}")
    seed = _resolve_seed(args.seed)
    points, _ = read_points_csv(args.input)
    data = Dataset(points)
    rows = []
    for q in range(data.dim):
        col = data.points[:, q]
        eps = interval_radius(col)
        constant = float(col.min()) == float(col.max())
        rows.append(
            {
                "axis": q + 1,
                "epsilon": repr(eps),
                "mu0": repr(density_measure_1d(col)),
                "bad_split_measure": repr(0.0 if constant or len(col) < 2
                                          else bad_split_measure(col, args.alpha)),
            }
        )
    rows.append(
        {
            "axis": "overall",
            "epsilon": "",
            "mu0": repr(density_measure(data)),
            "bad_split_measure": "",
        }
    )
    meta = _base_meta(args, seed, alpha=args.alpha, n=len(data), dim=data.dim)
    _emit_rows(args, meta, ["axis", "epsilon", "mu0", "bad_split_measure"], rows)
    return 0


def _bench_metric_rows(args, seed: int):
    kinds_rc = [AlgorithmKind.RRCF, AlgorithmKind.WRCF]
    seeds = [seed + i for i in range(args.repeats)]
    if args.experiment == "sine":
        series = gen_sine_anomaly()
        for kind in kinds_rc:
            for j, score in stream_codisp_iter(series, args.shingle, args.window,
                                               args.forest_size, kind=kind,
                                               alpha=args.alpha, seed=seed):
                yield {"x": j + 1, "y": repr(score), "series": kind.value}
        return
    if args.experiment == "ten-points":
        data = ten_point_dataset()
        for kind in kinds_rc:
            for s in seeds:
                gap, _, final = convergence_gap(data, kind, seed=s,
                                                iterations=args.iterations,
                                                checkpoint=min(10, args.iterations),
                                                alpha=args.alpha)
                yield {"algorithm": kind.value, "seed": s, "N": args.iterations,
                       "metric": "gap_l1_from_10", "value": repr(gap)}
                for pid, val in enumerate(final):
                    yield {"algorithm": kind.value, "seed": s, "N": args.iterations,
                           "metric": f"avg_codisp_{pid}", "value": repr(val)}
        return
    if args.experiment in ("clusters", "clusters-noise"):
        gen = gen_shifted_clusters if args.experiment == "clusters" else gen_clusters_with_noise
        labeled = gen(seed)
        sample = args.sample_size if args.sample_size else (None if args.experiment == "clusters" else 20)
        counts = detection_count_vs_iterations(
            labeled, kinds_rc, [args.iterations], seeds,
            sample_size=sample if sample else len(labeled.data),
            threshold=args.threshold, alpha=args.alpha, threads=args.threads)
        for row in counts:
            yield {"algorithm": row["algorithm"], "seed": row["seed"],
                   "N": row["iterations"], "metric": f"detected@{args.threshold}",
                   "value": row["detected"]}
        return
    if args.experiment == "auc":
        if args.input is None:
            raise ConfigError("--experiment auc needs an input CSV with a label column")
        points, labels = read_points_csv(args.input)
        if labels is None:
            raise InputError("auc experiment needs a 'label' column")
        labeled = LabeledDataset(Dataset(points), labels)
        kinds = [AlgorithmKind.IF, AlgorithmKind.WIF, AlgorithmKind.RRCF, AlgorithmKind.WRCF]
        for row in auc_vs_tree_size(labeled, kinds, args.tree_sizes, seeds,
                                    iterations=args.iterations, alpha=args.alpha,
                                    threads=args.threads):
            yield {"algorithm": row["algorithm"], "seed": row["seed"],
                   "N": row["tree_size"], "metric": "auc", "value": repr(row["auc"])}
        return
    raise ConfigError(f"unknown experiment {args.experiment!r}")


def cmd_bench(args) -> int:
    seed = _resolve_seed(args.seed)
    rows = list(_bench_metric_rows(args, seed))
    meta = _base_meta(args, seed, experiment=args.experiment, alpha=args.alpha)
    fields = ["x", "y", "series"] if args.experiment == "sine" else [
        "algorithm", "seed", "N", "metric", "value"
    ]
    _emit_rows(args, meta, fields, rows)
    return 0


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cutforest",
                     description="Tree-ensemble anomaly detection with density-aware splits")
    parser.add_argument("--version", action="version", version=f"cutforest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_algorithm=True):
        if with_algorithm:
            p.add_argument("--algorithm", default="wrcf",
                           help="one of if, wif, rrcf, wrcf (default wrcf)")
        p.add_argument("--alpha", type=int, default=2,
                       help="density threshold for wif/wrcf (default 2)")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed; falls back to $CUTFOREST_SEED, else generated")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for tree building (results identical)")
        p.add_argument("--output", default=None, help="output path (default stdout)")

    p_score = sub.add_parser("score", help="score a batch CSV of points")
    common(p_score)
    p_score.add_argument("--iterations", type=int, default=100,
                         help="bagging iterations (default 100)")
    p_score.add_argument("--sample-size", type=int, default=None,
                         help="points per tree (default: whole dataset)")
    p_score.add_argument("input", nargs="?", default=None,
                         help="CSV of coordinates (default stdin)")
    p_score.set_defaults(func=cmd_score)

    p_stream = sub.add_parser("stream", help="score a scalar series, one value per line")
    common(p_stream)
    p_stream.add_argument("--shingle", type=int, default=4, help="shingle size h")
    p_stream.add_argument("--window", type=int, default=256, help="window size w")
    p_stream.add_argument("--forest-size", type=int, default=40, help="trees per window")
    p_stream.add_argument("input", nargs="?", default=None,
                          help="series file (default stdin)")
    p_stream.set_defaults(func=cmd_stream)

    p_density = sub.add_parser("density", help="report the density measure of a CSV")
    common(p_density, with_algorithm=False)
    p_density.add_argument("input", nargs="?", default=None,
                           help="CSV of coordinates (default stdin)")
    p_density.set_defaults(func=cmd_density)

    p_bench = sub.add_parser("bench", help="run a comparison experiment")
    common(p_bench)
    p_bench.add_argument("--experiment", required=True,
                         choices=("sine", "ten-points", "clusters", "clusters-noise", "auc"))
    p_bench.add_argument("--iterations", type=int, default=100)
    p_bench.add_argument("--sample-size", type=int, default=None)
    p_bench.add_argument("--threshold", type=float, default=0.35)
    p_bench.add_argument("--repeats", type=int, default=1,
                         help="seeds per configuration (seed, seed+1, ...)")
    p_bench.add_argument("--shingle", type=int, default=4)
    p_bench.add_argument("--window", type=int, default=256)
    p_bench.add_argument("--forest-size", type=int, default=40)
    p_bench.add_argument("--tree-sizes", type=int, nargs="+", default=[32, 64, 128])
    p_bench.add_argument("--input", default=None, help="labeled CSV for the auc experiment")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"cutforest: configuration error: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"cutforest: input error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # parameter validation raised by the library maps to configuration errors
        print(f"cutforest: configuration error: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        return 0
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, never raises
        print(f"cutforest: internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
