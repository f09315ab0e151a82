"""Command-line front end.

Subcommands: ``cluster`` runs either pipeline on a CSV dataset, ``envelope``
precomputes and persists a test-envelope cache, ``datagen`` writes synthetic
benchmark datasets, and ``bench`` sweeps a grid of synthetic settings and
reports success rates and Rand indices.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O or parse error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .core import cluster_ks, cluster_rk
from .datagen import SimSpec, generate, write_csv
from .metrics import NOISE_LABEL, rand_index, silhouette_avg
from .spatial import (
    BoxWindow,
    DEFAULT_GRID_SIZE,
    DEFAULT_MIN_POINTS,
    DEFAULT_REPLICATES,
    EnvelopeTable,
    box_grid,
    envelope_cache_name,
    k_hat,
    l_hat_minus_t,
    unit_ball_grid,
)

RESULT_SCHEMA_VERSION = 1
CACHE_ENV_VAR = "CCDCLUSTER_CACHE"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# CSV input


def read_csv_dataset(path: str):
    """Parse a CSV of real coordinates, with an optional header.

    When a header is present and its last column is named ``label`` that
    column is returned as integer ground truth.  Malformed cells raise
    ``CliError`` with line and column diagnostics.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise CliError(f"{path}: empty dataset", EXIT_IO)

    header = None
    first = rows[0]
    try:
        [float(cell) for cell in first]
    except ValueError:
        header = [cell.strip() for cell in first]
        rows = rows[1:]
        if not rows:
            raise CliError(f"{path}: header but no data rows", EXIT_IO)

    has_label = header is not None and header[-1].lower() == "label"
    width = len(rows[0])
    data = []
    labels = []
    for line_no, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise CliError(
                f"{path}:{line_no}: expected {width} columns, found {len(row)}",
                EXIT_IO,
            )
        values = []
        for col_no, cell in enumerate(row, start=1):
            if has_label and col_no == width:
                try:
                    labels.append(int(float(cell)))
                except ValueError:
                    raise CliError(
                        f"{path}:{line_no}:{col_no}: not an integer label: {cell!r}",
                        EXIT_IO,
                    ) from None
            else:
                try:
                    values.append(float(cell))
                except ValueError:
                    raise CliError(
                        f"{path}:{line_no}:{col_no}: not a number: {cell!r}",
                        EXIT_IO,
                    ) from None
        data.append(values)
    X = np.asarray(data, dtype=float)
    y = np.asarray(labels, dtype=np.intp) if has_label else None
    return X, y


# ---------------------------------------------------------------------------
# envelope cache plumbing


def default_cache_dir() -> str:
    override = os.environ.get(CACHE_ENV_VAR)
    if override:
        return override
    return os.path.join(os.path.expanduser("~"), ".cache", "ccdcluster")


def _envelope_table(dimension: int, reps: int, seed: int, cache: Optional[str]) -> EnvelopeTable:
    t_grid = unit_ball_grid(DEFAULT_GRID_SIZE)
    cache_dir = cache or default_cache_dir()
    try:
        os.makedirs(cache_dir, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create cache directory {cache_dir}: {exc}", EXIT_IO) from exc
    path = os.path.join(cache_dir, envelope_cache_name(dimension, reps, seed, t_grid))
    if os.path.exists(path):
        table = EnvelopeTable.load(path)
        table.cache_path = path
        return table
    return EnvelopeTable(
        dimension=dimension,
        replicates=reps,
        seed=seed,
        t_grid=t_grid,
        cache_path=path,
    )


# ---------------------------------------------------------------------------
# cluster


def _format_result_text(payload: dict) -> str:
    lines = [
        "[run]",
        f"schema_version: {payload['schema_version']}",
        f"mode: {payload['mode']}",
        f"shape: {payload['shape']}",
        f"n: {payload['n']}",
        f"d: {payload['d']}",
        f"seed: {payload['seed']}",
        "",
        "[model]",
        f"k_hat: {payload['k_hat']}",
        f"centers: {' '.join(str(c) for c in payload['centers'])}",
        f"center_radii: {' '.join(repr(r) for r in payload['center_radii'])}",
        f"silhouette: {payload['silhouette']!r}",
    ]
    if payload.get("rand_index") is not None:
        lines.append(f"rand_index: {payload['rand_index']!r}")
    lines.append("")
    lines.append("[labels]")
    lines.extend(str(v) for v in payload["labels"])
    lines.append("")
    lines.append("[covered]")
    lines.extend("1" if v else "0" for v in payload["covered"])
    lines.append("")
    return "\n".join(lines)


def cmd_cluster(args) -> int:
    if args.mode == "ks" and args.delta is None:
        raise CliError("--delta is required with --mode ks", EXIT_USAGE)
    if args.mode == "rk" and args.delta is not None:
        raise CliError("--delta is not allowed with --mode rk", EXIT_USAGE)

    X, y = read_csv_dataset(args.input)
    if X.shape[0] < 2:
        raise CliError("the dataset needs at least two points", EXIT_USAGE)

    if args.mode == "ks":
        model, partition = cluster_ks(
            X, args.delta, shape=args.shape, mark_noise=args.mark_noise
        )
    else:
        table = _envelope_table(X.shape[1], args.envelope_reps, args.seed, args.cache)
        model, partition = cluster_rk(
            X,
            shape=args.shape,
            envelope=table,
            mark_noise=args.mark_noise,
        )

    labels = partition.labels
    scored = labels != NOISE_LABEL
    if np.unique(labels[scored]).size >= 2 and int(scored.sum()) >= 2:
        sil = silhouette_avg(X[scored], labels[scored])
    else:
        sil = 0.0
    ri = None
    if y is not None:
        ri = rand_index(y, labels)

    payload = {
        "schema_version": RESULT_SCHEMA_VERSION,
        "tool_version": __version__,
        "mode": args.mode,
        "shape": args.shape,
        "n": int(X.shape[0]),
        "d": int(X.shape[1]),
        "seed": int(args.seed),
        "k_hat": int(model.k_hat_clusters),
        "centers": [int(c) for c in model.centers],
        "center_radii": [float(r) for r in model.center_radii],
        "silhouette": float(sil),
        "rand_index": None if ri is None else float(ri),
        "labels": [int(v) for v in labels],
        "covered": [bool(v) for v in partition.covered],
    }
    if args.delta is not None:
        payload["delta"] = float(args.delta)

    try:
        with open(args.output, "w") as fh:
            fh.write(_format_result_text(payload))
        with open(_json_sibling(args.output), "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write results: {exc}", EXIT_IO) from exc

    if args.curve_out:
        _write_curve(X, args.curve_out)
    return EXIT_OK


def _json_sibling(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + ".json"


def _write_curve(X: np.ndarray, path: str) -> None:
    """Plot-ready CSV of the centred L curve over the data bounding box."""
    if X.shape[1] != 2:
        raise CliError("--curve-out needs 2-d data", EXIT_USAGE)
    window = BoxWindow(X.min(axis=0), X.max(axis=0))
    grid = box_grid(window)
    curve = k_hat(X, window, grid)
    lmt = l_hat_minus_t(curve)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "l_minus_t"])
            for t, v in zip(curve.t_grid, lmt):
                writer.writerow([repr(float(t)), repr(float(v))])
    except OSError as exc:
        raise CliError(f"cannot write curve file: {exc}", EXIT_IO) from exc


# ---------------------------------------------------------------------------
# envelope


def cmd_envelope(args) -> int:
    if args.m_max < DEFAULT_MIN_POINTS:
        raise CliError(f"--m-max must be at least {DEFAULT_MIN_POINTS}", EXIT_USAGE)
    t_grid = unit_ball_grid(DEFAULT_GRID_SIZE)
    if args.cache:
        path = args.cache
        parent = os.path.dirname(path) or "."
    else:
        parent = default_cache_dir()
        path = os.path.join(
            parent, envelope_cache_name(args.dimension, args.reps, args.seed, t_grid)
        )
    try:
        os.makedirs(parent, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {parent}: {exc}", EXIT_IO) from exc

    wanted = range(DEFAULT_MIN_POINTS, args.m_max + 1)
    if os.path.exists(path):
        table = EnvelopeTable.load(path)
        matches = (
            table.dimension == args.dimension
            and table.replicates == args.reps
            and table.seed == args.seed
            and np.array_equal(table.t_grid, t_grid)
        )
        if matches and all(m in table._upper for m in wanted):
            print(f"envelope cache up to date: {path} ({len(table.m_values)} sizes)")
            return EXIT_OK
        if not matches:
            raise CliError(
                f"{path} exists with different parameters; refusing to overwrite",
                EXIT_USAGE,
            )
        table.cache_path = path
    else:
        table = EnvelopeTable(
            dimension=args.dimension,
            replicates=args.reps,
            seed=args.seed,
            t_grid=t_grid,
            cache_path=path,
        )
    table.ensure(wanted)
    try:
        table.save()
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc
    print(f"envelope cache written: {path} ({len(table.m_values)} sizes)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# datagen


def cmd_datagen(args) -> int:
    spec = SimSpec(
        setting=args.setting,
        clusters=args.clusters,
        points_per_cluster=args.points_per_cluster,
        dimension=args.dimension,
        dist=args.dist,
        theta=args.theta,
        cluster_scale=args.cluster_scale,
        seed=args.seed,
    )
    dataset = generate(spec)
    try:
        write_csv(dataset, args.output)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from exc
    print(f"wrote {dataset.points.shape[0]} rows to {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _derived_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])


def run_benchmark(
    setting: str,
    clusters: list,
    points: list,
    dimensions: list,
    dist: str,
    replicates: int,
    mode: str,
    seed: int,
    delta: Optional[float] = None,
    shape: str = "convex",
    envelope_reps: int = DEFAULT_REPLICATES,
    cache: Optional[str] = None,
) -> list:
    """Run the benchmark grid and return one result row per cell.

    Each row is a dict with the cell coordinates, the fraction of replicates
    that recovered the true cluster count, and the mean Rand index against
    the generating labels.  Deterministic in ``seed``.
    """
    tables: dict = {}
    rows = []
    for d in dimensions:
        if mode == "rk":
            tables[d] = _envelope_table(d, envelope_reps, seed, cache)
        for K in clusters:
            for n in points:
                successes = 0
                ri_sum = 0.0
                for rep in range(replicates):
                    spec = SimSpec(
                        setting=setting,
                        clusters=K,
                        points_per_cluster=n,
                        dimension=d,
                        dist=dist,
                        seed=_derived_seed(seed, d, K, n, rep),
                    )
                    data = generate(spec)
                    if mode == "rk":
                        model, partition = cluster_rk(
                            data.points, shape=shape, envelope=tables[d]
                        )
                    else:
                        model, partition = cluster_ks(data.points, delta, shape=shape)
                    if model.k_hat_clusters == K:
                        successes += 1
                    ri_sum += rand_index(data.true_labels, partition.labels)
                rows.append(
                    {
                        "setting": setting,
                        "dist": dist,
                        "mode": mode,
                        "d": d,
                        "K": K,
                        "n": n,
                        "replicates": replicates,
                        "success_rate": successes / replicates,
                        "mean_ri": ri_sum / replicates,
                    }
                )
        if mode == "rk" and tables[d].cache_path and tables[d].dirty:
            tables[d].save()
    return rows


def cmd_bench(args) -> int:
    if args.mode == "ks" and args.delta is None:
        raise CliError("--delta is required with --mode ks", EXIT_USAGE)
    if args.mode == "rk" and args.delta is not None:
        raise CliError("--delta is not allowed with --mode rk", EXIT_USAGE)
    rows = run_benchmark(
        setting=args.setting,
        clusters=args.clusters,
        points=args.points,
        dimensions=args.dimensions,
        dist=args.dist,
        replicates=args.replicates,
        mode=args.mode,
        seed=args.seed,
        delta=args.delta,
        shape=args.shape,
        envelope_reps=args.envelope_reps,
        cache=args.cache,
    )
    fields = [
        "setting",
        "dist",
        "mode",
        "d",
        "K",
        "n",
        "replicates",
        "success_rate",
        "mean_ri",
    ]
    try:
        with open(args.output, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                out = dict(row)
                out["success_rate"] = repr(row["success_rate"])
                out["mean_ri"] = repr(row["mean_ri"])
                writer.writerow(out)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from exc
    for row in rows:
        print(
            f"d={row['d']} K={row['K']} n={row['n']}: "
            f"success={row['success_rate']:.2f} ri={row['mean_ri']:.3f}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _int_list(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccdcluster", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster a CSV dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=["rk", "ks"], default="rk")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--shape", choices=["convex", "arbitrary"], default="convex")
    p.add_argument("--envelope-reps", type=int, default=DEFAULT_REPLICATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mark-noise", action="store_true")
    p.add_argument("--cache", default=None, help="envelope cache directory")
    p.add_argument("--curve-out", default=None, help="write the centred L curve CSV here")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("envelope", help="precompute an envelope cache")
    p.add_argument("--dimension", type=int, required=True)
    p.add_argument("--reps", type=int, default=DEFAULT_REPLICATES)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache", default=None, help="cache file path")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("datagen", help="generate a synthetic dataset CSV")
    p.add_argument(
        "--setting", choices=["fixed_centers", "strauss", "strauss_noise"], required=True
    )
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--points-per-cluster", type=int, required=True)
    p.add_argument("--dimension", type=int, required=True)
    p.add_argument("--dist", choices=["uniform", "normal"], default="uniform")
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--cluster-scale", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("bench", help="run a synthetic benchmark grid")
    p.add_argument(
        "--setting", choices=["fixed_centers", "strauss", "strauss_noise"], required=True
    )
    p.add_argument("--clusters", type=_int_list, required=True)
    p.add_argument("--points", type=_int_list, required=True)
    p.add_argument("--dimensions", type=_int_list, required=True)
    p.add_argument("--dist", choices=["uniform", "normal"], default="uniform")
    p.add_argument("--replicates", type=int, default=25)
    p.add_argument("--mode", choices=["rk", "ks"], default="rk")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--shape", choices=["convex", "arbitrary"], default="convex")
    p.add_argument("--envelope-reps", type=int, default=DEFAULT_REPLICATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache", default=None, help="envelope cache directory")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
