"""Command-line entry point.

    clusterlab grow --dim 2 --alpha 0.5 --n 1000 --seed 7 --out cluster.csv
    clusterlab mst --in cluster.csv [--exact]
    clusterlab experiment --kind scaling --dim 2 --alpha 0.25 --trials 20
    clusterlab replay cluster.manifest.json [--out-dir elsewhere/]

Exit status: 0 when every requested check passes, 1 when a check fails,
2 for usage or input errors.  The seed comes from ``--seed``, else the
``CLUSTERLAB_SEED`` environment variable, else 0.  Every run writes a
``*.manifest.json`` holding the resolved parameters; ``replay`` re-runs it.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

from clusterlab import experiments as ex
from clusterlab.geometry import emst_exact, emst_fast
from clusterlab.io import fmt_short, manifest_path_for, read_json, write_manifest
from clusterlab.process import (
    ClusterFormatError,
    GrowthConfig,
    grow,
    read_cluster_csv,
    read_points_file,
    sidecar_path,
    write_cluster_csv,
)

SEED_ENV = "CLUSTERLAB_SEED"

KIND_DEFAULTS = {
    "scaling": {"dim": 2, "alpha": 0.5, "n_list": [2**k for k in range(10, 17)], "trials": 20},
    "tail": {"dim": 2, "alpha": 0.5, "n": 100_000, "trials": 1000, "L_grid": list(range(1, 11))},
    "pairs": {"dim": 2, "alpha": 0.5, "n_list": [2**k for k in range(12, 16)], "trials": 20, "epsilon": 0.1},
    "depth": {"dim": 2, "alpha": 0.5, "m": [100, 1000], "trials": 1000},
    "urn": {"dim": 2, "alpha": 0.5, "m": [2, 5, 10, 50], "n": 10_000, "trials": 1000},
    "alpha-zero": {"dim": 2, "alpha": 0.0, "n_list": [2**k for k in range(10, 17)], "trials": 20},
}
KINDS = tuple(KIND_DEFAULTS)


class UsageError(Exception):
    pass


# -- value parsing -------------------------------------------------------------


def _positive_int(text) -> int:
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text!r}")
    return v


def _nonneg_float(text) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not math.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"must be finite and non-negative, got {text!r}")
    return v


def _positive_float(text) -> float:
    v = _nonneg_float(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _seed(text) -> int:
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"must be in [0, 2^64), got {text!r}")
    return v


def _int_list(text) -> list[int]:
    if isinstance(text, list):
        return [_positive_int(x) for x in text]
    try:
        return [_positive_int(x) for x in str(text).split(",") if x.strip()]
    except argparse.ArgumentTypeError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated positive integers: {exc}") from None


def _float_list(text) -> list[float]:
    if isinstance(text, list):
        return [_nonneg_float(x) for x in text]
    return [_nonneg_float(x) for x in str(text).split(",") if x.strip()]


# flag name -> (parameter key, parser)
EXPERIMENT_FLAGS = {
    "dim": ("dim", _positive_int),
    "alpha": ("alpha", _nonneg_float),
    "n": ("n", _positive_int),
    "n-list": ("n_list", _int_list),
    "trials": ("trials", _positive_int),
    "epsilon": ("epsilon", _positive_float),
    "m": ("m", _int_list),
    "L-grid": ("L_grid", _float_list),
    "seed": ("seed", _seed),
}


def resolve_seed(flag_value) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return _seed(env.strip())
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{SEED_ENV}: {exc}") from None
    return 0


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment.  Keys use flag spelling."""
    params = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise UsageError(f"--config {path} line {lineno}: expected key=value")
        key, value = (s.strip() for s in text.split("=", 1))
        key = key.replace("_", "-")
        if key == "l-grid":
            key = "L-grid"
        if key == "kind":
            params["kind"] = value
            continue
        if key not in EXPERIMENT_FLAGS:
            raise UsageError(f"--config {path} line {lineno}: unknown key {key!r}")
        name, parse = EXPERIMENT_FLAGS[key]
        try:
            params[name] = parse(value)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"--config {path} line {lineno}: {key}: {exc}") from None
    return params


# -- runners (shared by the subcommands and replay) ------------------------------


def run_grow(params: dict, out: Path) -> list[Path]:
    init = params.get("initial_points")
    config = GrowthConfig(params["dim"], params["alpha"], params["n"], params["seed"],
                          None if init is None else tuple(tuple(p) for p in init))
    t0 = time.perf_counter()
    path = write_cluster_csv(grow(config), out)
    outputs = [path, sidecar_path(path)]
    write_manifest("grow", params, params["seed"], outputs, time.perf_counter() - t0)
    print(f"wrote {path} ({config.n_points} points, d={config.dimension})")
    return outputs


def run_mst(params: dict, out: Path) -> list[Path]:
    t0 = time.perf_counter()
    try:
        cluster = read_cluster_csv(params["in"])
    except FileNotFoundError:
        raise UsageError(f"--in: no such file {params['in']}") from None
    except ClusterFormatError as exc:
        raise UsageError(f"--in {params['in']}: {exc}") from None
    tree = (emst_exact if params["exact"] else emst_fast)(cluster.points)
    summary_path = out.with_name(out.stem + ".summary.json")
    outputs = [tree.to_csv(out), tree.write_summary(summary_path)]
    seed = None if cluster.config is None else cluster.config.seed
    write_manifest("mst", params, seed, outputs, time.perf_counter() - t0)
    print(f"EMST n={tree.n} edges={len(tree)} total_length={fmt_short(tree.total_length)}")
    return outputs


def run_experiment(params: dict, out_dir: Path, threads: int = 1) -> tuple[list[Path], bool]:
    kind = params["kind"]
    p = params
    t0 = time.perf_counter()
    try:
        if kind == "scaling":
            report = ex.scaling_experiment(p["dim"], p["alpha"], p["n_list"], p["trials"], p["seed"], threads)
        elif kind == "tail":
            report = ex.tail_experiment(p["dim"], p["alpha"], p["n"], p["trials"], p["L_grid"], p["seed"], threads)
        elif kind == "pairs":
            report = ex.close_pair_experiment(p["dim"], p["alpha"], p["n_list"], p["trials"], p["epsilon"],
                                              p["seed"], threads)
        elif kind == "depth":
            report = ex.depth_tail_experiment(p["m"], p["trials"], p["seed"], p["dim"], p["alpha"], threads)
        elif kind == "urn":
            report = ex.urn_validation(p["m"], p["n"], p["trials"], p["seed"], p["dim"], p["alpha"], threads)
        elif kind == "alpha-zero":
            report = ex.alpha_zero_experiment(p["dim"], p["n_list"], p["trials"], p["seed"], threads)
        else:
            raise UsageError(f"--kind: unknown kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    except ValueError as exc:
        raise UsageError(f"{kind}: {exc}") from None
    path = report.to_csv(out_dir / f"{report.file_stem}.csv")
    write_manifest("experiment", params, p["seed"], [path], time.perf_counter() - t0)
    for check in report.checks:
        print(check.line())
    print(f"wrote {path}")
    return [path], report.passed


# -- argument handling -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clusterlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grow", help="generate a cluster")
    g.add_argument("--dim", type=_positive_int, required=True)
    g.add_argument("--alpha", type=_nonneg_float, required=True)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--seed", type=_seed, default=None)
    g.add_argument("--out", type=Path, default=Path("cluster.csv"))
    g.add_argument("--initial-points", type=Path, default=None,
                   help="file of starting points, one per line")

    m = sub.add_parser("mst", help="EMST of a cluster CSV")
    m.add_argument("--in", dest="input", type=Path, required=True)
    m.add_argument("--exact", action="store_true", help="use the quadratic Prim reference")
    m.add_argument("--out", type=Path, default=None)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    e.add_argument("--kind", default=None, help=f"one of: {', '.join(KINDS)}")
    e.add_argument("--config", type=Path, default=None, help="key=value parameter file")
    for flag, (name, parse) in EXPERIMENT_FLAGS.items():
        e.add_argument(f"--{flag}", dest=name, type=parse, default=None)
    e.add_argument("--threads", type=_positive_int, default=1)
    e.add_argument("--out-dir", type=Path, default=Path("."))

    r = sub.add_parser("replay", help="re-run a command from its manifest")
    r.add_argument("manifest", type=Path)
    r.add_argument("--out-dir", type=Path, default=None,
                   help="write outputs here instead of their recorded paths")
    return parser


def _experiment_params(args) -> dict:
    params = read_config_file(args.config) if args.config is not None else {}
    kind = args.kind or params.get("kind")
    if kind is None:
        raise UsageError(f"--kind is required; valid kinds: {', '.join(KINDS)}")
    if kind not in KIND_DEFAULTS:
        raise UsageError(f"--kind: unknown kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    resolved = dict(KIND_DEFAULTS[kind])
    resolved.update({k: v for k, v in params.items() if k != "kind"})
    for _, (name, _) in EXPERIMENT_FLAGS.items():
        value = getattr(args, name)
        if value is not None:
            resolved[name] = value
    resolved["seed"] = resolve_seed(getattr(args, "seed") if args.seed is not None else params.get("seed"))
    if kind == "alpha-zero":
        resolved["alpha"] = 0.0
    resolved["kind"] = kind
    return resolved


def _replay(args) -> int:
    try:
        manifest = read_json(args.manifest)
        command, params, outputs = manifest["command"], manifest["parameters"], manifest["outputs"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"manifest {args.manifest}: {exc}") from None
    first = Path(outputs[0])
    if args.out_dir is not None:
        first = args.out_dir / first.name
    if command == "grow":
        run_grow(params, first)
    elif command == "mst":
        run_mst(params, first)
    elif command == "experiment":
        _, ok = run_experiment(params, first.parent)
        return 0 if ok else 1
    else:
        raise UsageError(f"manifest {args.manifest}: unknown command {command!r}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "grow":
            init = None
            if args.initial_points is not None:
                try:
                    init = read_points_file(args.initial_points)
                except OSError as exc:
                    raise UsageError(f"--initial-points: {exc.strerror}: {args.initial_points}") from None
                except ClusterFormatError as exc:
                    raise UsageError(f"--initial-points: {exc}") from None
            params = {"dim": args.dim, "alpha": args.alpha, "n": args.n,
                      "seed": resolve_seed(args.seed), "initial_points": init}
            try:
                GrowthConfig(params["dim"], params["alpha"], params["n"], params["seed"],
                             None if init is None else tuple(tuple(p) for p in init))
            except ValueError as exc:
                flag = "--initial-points" if init is not None else "--n"
                raise UsageError(f"{flag}: {exc}") from None
            run_grow(params, args.out)
        elif args.command == "mst":
            out = args.out or args.input.with_name(args.input.stem + ".mst.csv")
            run_mst({"in": os.fspath(args.input.resolve()), "exact": args.exact}, out)
        elif args.command == "experiment":
            _, ok = run_experiment(_experiment_params(args), args.out_dir, args.threads)
            return 0 if ok else 1
        else:
            return _replay(args)
    except UsageError as exc:
        print(f"clusterlab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
