"""Command-line interface: ``cfr train | benchmark | gamma-demo | profile | render``.

Exit codes: 0 on success, 2 on bad input, 3 when a benchmark skipped datasets.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from cfr.config import MAConfig
from cfr.data import DatasetLoadError, load_dataset, train_test_split
from cfr.memetic import run
from cfr.model import ModelParseError, deserialize, predict, render_formula, render_latex, serialize
from cfr.profiles import ProfileError, performance_profiles, read_error_table, write_profiles
from cfr.reference import GammaDatasetSpec, gamma, make_gamma_dataset

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PARTIAL = 3

DATASET_SUFFIXES = (".tsv", ".csv", ".txt", ".tsv.gz", ".csv.gz", ".txt.gz")


class InputError(Exception):
    pass


@dataclass
class ResultRow:
    dataset: str
    run_index: str
    seed: int
    config_hash: str
    train_mse: float
    test_mse: float
    train_nmse: float
    test_nmse: float
    n_vars_used: float
    depth: int
    wall_seconds: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def cells(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "wall_seconds":
                out.append(f"{v:.3f}")
            elif isinstance(v, float):
                out.append(_fmt_float(v))
            else:
                out.append(str(v))
        return out


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def write_rows(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(ResultRow.columns())
        for r in rows:
            w.writerow(r.cells())


def median_row(rows: list[ResultRow]) -> ResultRow:
    """Per-dataset medians; even counts average the two middle values."""
    first = rows[0]

    def med(name):
        return float(np.median([getattr(r, name) for r in rows]))

    return ResultRow(first.dataset, "median", first.seed, first.config_hash,
                     med("train_mse"), med("test_mse"), med("train_nmse"), med("test_nmse"),
                     med("n_vars_used"), first.depth, med("wall_seconds"))


# -- argument handling -------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser):
    d = MAConfig()
    p.add_argument("--delta", type=float, default=d.delta)
    p.add_argument("--depth", type=int, default=d.depth)
    p.add_argument("--generations", type=int, default=d.generations)
    p.add_argument("--mutation-rate", type=float, default=d.mutation_rate)
    p.add_argument("--nm-instances", type=int, default=d.nm_instances)
    p.add_argument("--nm-iterations", type=int, default=d.nm_iterations)
    p.add_argument("--nm-stagnation", type=int, default=d.nm_stagnation)
    p.add_argument("--subsample", type=float, default=d.subsample_fraction,
                   help="fraction of training rows each simplex search sees")
    p.add_argument("--reset-stagnation", type=int, default=d.root_reset_stagnation,
                   help="generations without improvement before the root is reset")
    p.add_argument("--seed", type=int, default=None, help="base seed (falls back to $CFR_SEED)")


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CFR_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"CFR_SEED must be an integer, got {env!r}") from None
    return int(np.random.SeedSequence().entropy % (2**31))


def _config(args, seed: int, depth: int | None = None) -> MAConfig:
    try:
        return MAConfig(
            delta=args.delta, depth=args.depth if depth is None else depth,
            generations=args.generations, mutation_rate=args.mutation_rate,
            nm_instances=args.nm_instances, nm_iterations=args.nm_iterations,
            nm_stagnation=args.nm_stagnation, subsample_fraction=args.subsample,
            root_reset_stagnation=args.reset_stagnation, seed=seed)
    except ValueError as exc:
        raise InputError(f"invalid setting: {exc}") from None


def _echo_config(cfg: MAConfig, stream=None):
    print(f"delta={cfg.delta:.2f} depth={cfg.depth} generations={cfg.generations} "
          f"mutation-rate={cfg.mutation_rate:.2f} seed={cfg.seed}", file=stream)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _split_rng(seed: int):
    # distinct from the streams the run itself derives from the same seed
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))


def _dataset_name(path: Path) -> str:
    name = path.name
    for suffix in (".gz", ".tsv", ".csv", ".txt"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


# -- single run, shared by train and benchmark --------------------------------

def _train_once(path, name, run_index, cfg: MAConfig, train_fraction, target_column):
    ds = load_dataset(path, target_column)
    train, test = train_test_split(ds, train_fraction, _split_rng(cfg.seed))
    res = run(train, test, cfg)
    row = ResultRow(name, str(run_index), cfg.seed, cfg.fingerprint(), res.train_mse, res.test_mse,
                    res.train_nmse, res.test_nmse, float(res.n_vars_used), cfg.depth,
                    res.wall_seconds)
    return row, serialize(res.best, ds.feature_names), render_formula(res.best, ds.feature_names)


def _benchmark_task(task):
    path, name, i, cfg, frac, target = task
    row, _, _ = _train_once(path, name, i, cfg, frac, target)
    return row


# -- commands ----------------------------------------------------------------

def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    cfg = _config(args, seed)
    _echo_config(cfg)
    path = Path(args.dataset)
    try:
        row, doc, formula = _train_once(path, _dataset_name(path), 0, cfg, args.train_fraction,
                                        args.target_column)
    except (DatasetLoadError, ValueError) as exc:
        raise InputError(str(exc)) from None
    out = _out_dir(args)
    (out / "model.json").write_text(doc, encoding="utf-8")
    (out / "formula.txt").write_text(formula + "\n", encoding="utf-8")
    write_rows([row], out / "result.tsv")
    print(formula)
    print(f"train_mse={_fmt_float(row.train_mse)} test_mse={_fmt_float(row.test_mse)} "
          f"test_nmse={_fmt_float(row.test_nmse)}")
    return EXIT_OK


def _collect_datasets(paths) -> list[Path]:
    found = []
    for p in map(Path, paths):
        if p.is_dir():
            found.extend(sorted(q for q in p.iterdir()
                                if q.is_file() and q.name.endswith(DATASET_SUFFIXES)))
        else:
            found.append(p)
    return found


def cmd_benchmark(args) -> int:
    if args.runs < 1:
        raise InputError("--runs must be at least 1")
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")
    base = _resolve_seed(args)
    cfg0 = _config(args, base)
    _echo_config(cfg0)
    datasets = _collect_datasets(args.datasets)
    if not datasets:
        raise InputError("no datasets found")

    failed, tasks = [], []
    for path in datasets:
        name = _dataset_name(path)
        try:
            load_dataset(path, args.target_column)
        except (DatasetLoadError, ValueError, OSError) as exc:
            print(f"skipping {name}: {exc}", file=sys.stderr)
            failed.append(name)
            continue
        for i in range(args.runs):
            tasks.append((path, name, i, _config(args, base + i), args.train_fraction,
                          args.target_column))

    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_benchmark_task, tasks))
    else:
        rows = [_benchmark_task(t) for t in tasks]

    out_rows = []
    by_name: dict[str, list[ResultRow]] = {}
    for r in rows:
        by_name.setdefault(r.dataset, []).append(r)
    for name, group in by_name.items():
        group.sort(key=lambda r: int(r.run_index))
        out_rows.extend(group)
        m = median_row(group)
        out_rows.append(m)
        print(f"{name}: median train_mse={_fmt_float(m.train_mse)} test_mse={_fmt_float(m.test_mse)} "
              f"train_nmse={_fmt_float(m.train_nmse)} test_nmse={_fmt_float(m.test_nmse)}")
    write_rows(out_rows, _out_dir(args) / "results.tsv")
    return EXIT_PARTIAL if failed else EXIT_OK


def _parse_depths(text: str) -> list[int]:
    try:
        depths = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"bad depth list {text!r}") from None
    if not depths or any(not 0 <= d <= 12 for d in depths):
        raise InputError("depths must be integers in 0..12")
    return depths


def cmd_gamma_demo(args) -> int:
    depths = _parse_depths(args.depths)
    if args.runs < 1:
        raise InputError("--runs must be at least 1")
    base = _resolve_seed(args)
    ds = make_gamma_dataset(GammaDatasetSpec())
    out = _out_dir(args)
    rows, table, dumps = [], [], {}
    for depth in depths:
        results = []
        for i in range(args.runs):
            cfg = _config(args, base + i, depth)
            res = run(ds, None, cfg)
            results.append(res)
            rows.append(ResultRow("gamma", str(i), cfg.seed, cfg.fingerprint(), res.train_mse,
                                  math.nan, res.train_nmse, math.nan, float(res.n_vars_used),
                                  depth, res.wall_seconds))
        med = float(np.median([r.train_mse for r in results]))
        table.append((depth, med))
        print(f"depth={depth} median_train_mse={_fmt_float(med)}")
        # the dump shows the best run at this depth
        best = min(results, key=lambda r: r.train_mse)
        dumps[depth] = predict(best.best, ds.features)
    write_rows(rows, out / "results.tsv")
    with open(out / "gamma_mse.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["depth", "median_train_mse", "runs"])
        for depth, med in table:
            w.writerow([depth, _fmt_float(med), args.runs])
    xs = ds.features[:, 1]
    with open(out / "gamma_values.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["x", "gamma"] + [f"depth_{d}" for d in depths])
        for k, x in enumerate(xs):
            w.writerow([repr(float(x)), repr(gamma(x))] + [_fmt_float(float(dumps[d][k])) for d in depths])
    return EXIT_OK


def cmd_profile(args) -> int:
    try:
        algorithms, datasets, errors = read_error_table(args.table)
        curves = performance_profiles(algorithms, errors, datasets)
    except (ProfileError, OSError) as exc:
        raise InputError(str(exc)) from None
    out = _out_dir(args)
    write_profiles(curves, out / "profiles.tsv")
    for c in curves:
        pts = " ".join(f"({x:g},{y:g})" for x, y in c.points)
        print(f"{c.algorithm}: {pts}")
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        text = Path(args.model).read_text(encoding="utf-8")
        cf, names = deserialize(text, return_names=True)
    except (OSError, ModelParseError) as exc:
        raise InputError(str(exc)) from None
    if args.latex:
        print(render_latex(cf, names, args.precision))
    else:
        print(render_formula(cf, names, args.precision))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfr", description="Continued fraction regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="one seeded run on a dataset")
    p.add_argument("dataset")
    _add_config_flags(p)
    p.add_argument("--train-fraction", type=float, default=0.75)
    p.add_argument("--target-column", default="target")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("benchmark", help="repeated runs over many datasets")
    p.add_argument("datasets", nargs="+", help="dataset files or directories")
    _add_config_flags(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.75)
    p.add_argument("--target-column", default="target")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("gamma-demo", help="fit the Gamma function at several depths")
    p.add_argument("--depths", default="2,4,6")
    _add_config_flags(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gamma_demo)

    p = sub.add_parser("profile", help="performance profiles from an error table")
    p.add_argument("table")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("render", help="print a saved model as a formula")
    p.add_argument("model")
    p.add_argument("--latex", action="store_true")
    p.add_argument("--precision", type=int, default=None)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "train_fraction") and not 0.0 < args.train_fraction < 1.0:
        parser.error("--train-fraction must lie in (0, 1)")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"cfr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
