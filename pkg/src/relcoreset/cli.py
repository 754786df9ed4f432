"""Command line front end.

Exit codes: 0 success, 2 instance or parameter validation failure (cyclic
join, bad arguments), 3 runtime failure (empty region, count overflow,
diverged training, build errors, cap refusals), 4 I/O failure (missing or
malformed files).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .aggtree import BuildError, RootSummary, build_tree
from .counting import CountContext, CountOverflowError, EmptyRegionError, PseudoCube
from .estimator import RelationalCoreset
from .evaluate import definition_check, split_label_column, weighted_objective
from .jointree import CyclicError, MaterializeCapError, check_acyclic, materialize
from .losses import LossModel
from .sampling import uniform_sample
from .schema import LoadError, load_tables
from .synth import (
    cluster_chain_instance,
    cyclic_instance,
    manifold_instance,
    random_instance,
    scaling_instance,
    tiered_instance,
    write_instance,
)
from .train import TrainingDivergedError, make_trainer
from .util import blob_hash
from .weights import WeightParams, assign_weights, read_coreset_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


def _load_ctx(spec: str) -> CountContext:
    tables, partition = load_tables(spec)
    tree = check_acyclic(tables)
    return CountContext(tables, partition, tree)


def _parse_cubes(path: str, ctx: CountContext) -> list[PseudoCube]:
    with open(path) as fh:
        doc = json.load(fh)
    entries = doc["cubes"] if isinstance(doc, dict) and "cubes" in doc else [doc]
    names = [t.name for t in ctx.tables]
    cubes = []
    for e in entries:
        refs = e["tables"]
        idx = []
        for r in refs:
            if isinstance(r, str):
                if r not in names:
                    raise ValueError(f"cube references unknown table {r!r} (have {names})")
                idx.append(names.index(r))
            else:
                idx.append(int(r))
        cube = PseudoCube(tuple(sorted(idx)), np.asarray(e["center"], dtype=np.float64), float(e["radius"]))
        cube.validate_blocks(ctx.partition)
        cubes.append(cube)
    return cubes


def _write_report(path: str | None, command: str, args, inputs: list[str], results: dict, timings: dict) -> None:
    if not path:
        return
    doc = {
        "schema_version": 1,
        "command": command,
        "params": {
            k: v for k, v in vars(args).items() if k not in ("func", "report", "json_errors") and v is not None
        },
        "inputs": {p: blob_hash(p) for p in inputs if p and os.path.exists(p)},
        "results": results,
        "timings": timings,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def _write_points_csv(path, header, points, extra_cols=()):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header) + [name for name, _ in extra_cols])
        extras = [vals for _, vals in extra_cols]
        for i, row in enumerate(points):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(vals[i])) for vals in extras])


# -- subcommands -------------------------------------------------------------


def cmd_validate(args) -> int:
    ctx = _load_ctx(args.spec)
    n = ctx.join_size()
    print(f"acyclic, n={n}")
    _write_report(args.report, "validate", args, [args.spec], {"n": n, "acyclic": True}, {})
    return EXIT_OK


def cmd_materialize(args) -> int:
    tables, partition = load_tables(args.spec)
    t0 = time.perf_counter()
    design = materialize(tables, partition, cap=args.cap)
    elapsed = time.perf_counter() - t0
    _write_points_csv(args.out, design.feature_order, design.points)
    print(f"wrote {design.n} rows to {args.out}")
    _write_report(args.report, "materialize", args, [args.spec], {"n": design.n}, {"materialize": elapsed})
    return EXIT_OK


def cmd_count(args) -> int:
    ctx = _load_ctx(args.spec)
    t0 = time.perf_counter()
    if args.cube:
        cubes = _parse_cubes(args.cube, ctx)
        n = ctx.pc_count(cubes)
    else:
        n = ctx.join_size()
    elapsed = time.perf_counter() - t0
    print(n)
    _write_report(args.report, "count", args, [args.spec, args.cube], {"count": n}, {"count": elapsed})
    return EXIT_OK


def cmd_sample(args) -> int:
    ctx = _load_ctx(args.spec)
    cubes = _parse_cubes(args.cube, ctx) if args.cube else None
    t0 = time.perf_counter()
    pts = uniform_sample(ctx, cubes, m=args.m, rng=args.seed)
    elapsed = time.perf_counter() - t0
    if args.out:
        _write_points_csv(args.out, ctx.partition.full, pts)
        print(f"wrote {args.m} samples to {args.out}")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(ctx.partition.full)
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])
    _write_report(args.report, "sample", args, [args.spec, args.cube], {"m": args.m}, {"sample": elapsed})
    return EXIT_OK


def _summary_to_json(summary: RootSummary, radii, merges, feature_order, n) -> dict:
    return {
        "schema_version": 1,
        "centers": summary.centers.tolist(),
        "final_radius": summary.final_radius,
        "k": summary.k,
        "seed": summary.seed,
        "level_factor": summary.level_factor,
        "feature_order": list(feature_order),
        "n": n,
        "radii": {"l": list(radii.l), "L": list(radii.L), "r0_hint": radii.r0_hint},
        "merges": [vars(m) for m in merges],
    }


def _summary_from_json(doc: dict, ctx: CountContext) -> RootSummary:
    centers = np.asarray(doc["centers"], dtype=np.float64)
    final = float(doc["final_radius"])
    tables = tuple(range(ctx.n_tables))
    cubes = tuple(PseudoCube(tables, centers[i], final) for i in range(centers.shape[0]))
    return RootSummary(
        centers=centers,
        final_radius=final,
        cubes=cubes,
        k=int(doc["k"]),
        seed=int(doc["seed"]),
        level_factor=doc.get("level_factor", "paper"),
    )


def cmd_build(args) -> int:
    ctx = _load_ctx(args.spec)
    result = build_tree(
        ctx, args.k, args.seed, level_factor=args.level_factor, threads=args.threads
    )
    doc = _summary_to_json(result.summary, result.radii, result.merges, ctx.partition.full, ctx.join_size())
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(
        f"built {result.summary.n_centers} centers, final radius {result.summary.final_radius:.6g}, "
        f"levels {len(result.radii.L) - 1}"
    )
    _write_report(
        args.report,
        "build",
        args,
        [args.spec],
        {
            "centers": result.summary.n_centers,
            "final_radius": result.summary.final_radius,
            "radii": doc["radii"],
            "merges": doc["merges"],
        },
        dict(result.timings),
    )
    return EXIT_OK


def cmd_weigh(args) -> int:
    ctx = _load_ctx(args.spec)
    with open(args.summary) as fh:
        doc = json.load(fh)
    summary = _summary_from_json(doc, ctx)
    params = WeightParams(args.eps1, args.beta, args.lam, args.m_cap, args.m_override)
    t0 = time.perf_counter()
    coreset = assign_weights(summary, ctx, params, seed=args.seed)
    elapsed = time.perf_counter() - t0
    coreset.write_csv(args.out)
    if args.meta:
        coreset.write_meta(args.meta)
    kept = int(coreset.heavy_mask.sum())
    print(f"wrote {kept} weighted points (of {len(coreset.weights)} cubes) to {args.out}")
    _write_report(
        args.report, "weigh", args, [args.spec, args.summary], dict(coreset.meta), {"weigh": elapsed}
    )
    return EXIT_OK


def cmd_coreset(args) -> int:
    est = RelationalCoreset(
        k=args.k,
        eps1=args.eps1,
        beta=args.beta,
        lam=args.lam,
        label_feature=args.label_feature,
        level_factor=args.level_factor,
        m_cap=args.m_cap,
        m_override=args.m_override,
        threads=args.threads,
        random_state=args.seed,
    )
    est.fit(args.spec)
    _write_points_csv(args.out, est.feature_order_, est.points_, extra_cols=[("weight", est.weights_)])
    print(
        f"coreset: {est.points_.shape[0]} points, total weight {est.weights_.sum():.6g}, join size {est.n_}"
    )
    _write_report(
        args.report,
        "coreset",
        args,
        [args.spec],
        {k: v for k, v in est.report_.items() if k != "timings"},
        est.report_["timings"],
    )
    return EXIT_OK


def _read_training_csv(path: str, label_col: str | None, weight_col: str = "weight"):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader if row]
    arr = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
    w = None
    if weight_col in header:
        w = arr[:, header.index(weight_col)]
        keep = [j for j, h in enumerate(header) if h != weight_col]
        arr = arr[:, keep]
        header = [h for h in header if h != weight_col]
    y = None
    if label_col is not None:
        if label_col not in header:
            raise ValueError(f"label column {label_col!r} not in {header}")
        y = arr[:, header.index(label_col)]
        keep = [j for j, h in enumerate(header) if h != label_col]
        arr = arr[:, keep]
        header = [h for h in header if h != label_col]
    return arr, y, w, header


def cmd_train(args) -> int:
    X, y, w, header = _read_training_csv(args.data, args.label_col)
    kw = {}
    if args.model == "kmeans":
        kw["n_clusters"] = args.k_clusters
    if args.model == "svm":
        kw["reg"] = args.reg
    trainer = make_trainer(args.model, seed=args.seed, **kw)
    t0 = time.perf_counter()
    if args.model == "kmeans":
        trainer.fit(X, sample_weight=w)
    else:
        if y is None:
            raise ValueError(f"{args.model} training needs --label-col")
        trainer.fit(X, y, sample_weight=w)
    elapsed = time.perf_counter() - t0
    theta = trainer.theta_
    doc = {
        "schema_version": 1,
        "model": args.model,
        "theta": theta.tolist(),
        "objective": trainer.objective_,
        "features": header,
        "seed": args.seed,
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"trained {args.model}: objective {trainer.objective_:.6g}")
    _write_report(
        args.report, "train", args, [args.data], {"objective": trainer.objective_}, {"train": elapsed}
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    tables, partition = load_tables(args.spec)
    ctx = CountContext(tables, partition)
    pts, w, order = read_coreset_csv(args.coreset)
    if tuple(order) != tuple(partition.full):
        raise ValueError(f"coreset columns {order} do not match instance features {partition.full}")
    with open(args.theta) as fh:
        tdoc = json.load(fh)
    model = LossModel(tdoc["model"], reg=args.reg) if tdoc["model"] == "svm" else LossModel(tdoc["model"])
    theta = np.asarray(tdoc["theta"], dtype=np.float64)
    label = args.label_feature
    timings = {}
    results: dict = {}
    coreset_obj = weighted_objective(model, theta, pts, w, partition.full, label)
    results["coreset_objective"] = coreset_obj
    if args.oracle:
        t0 = time.perf_counter()
        design = materialize(tables, partition, cap=args.cap)
        timings["materialize"] = time.perf_counter() - t0
        radius = args.radius
        if radius is None and args.meta:
            with open(args.meta) as fh:
                radius = float(json.load(fh)["final_radius"])
        if radius is not None:
            rep = definition_check(
                model, theta, design.points, pts, w, partition.full, radius, args.eps1, label
            )
            results.update(rep.to_dict())
        else:
            full_obj = weighted_objective(model, theta, design.points, None, partition.full, label)
            results["full_objective"] = full_obj
            results["multiplicative_gap"] = (
                abs(coreset_obj - full_obj) / full_obj if full_obj > 0 else 0.0
            )
        print(f"coreset {coreset_obj:.6g} vs full {results['full_objective']:.6g}")
    else:
        print(f"coreset objective {coreset_obj:.6g}")
    _write_report(
        args.report, "evaluate", args, [args.spec, args.coreset, args.theta], results, timings
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.kind == "random":
        tables = random_instance(args.seed, s=args.s, max_rows=args.rows, key_domain=args.key_domain)
    elif args.kind == "cyclic":
        tables = cyclic_instance(args.seed)
    elif args.kind == "manifold":
        tables = manifold_instance(args.seed)
    elif args.kind == "clusters":
        tables = cluster_chain_instance(
            args.seed,
            rows=args.rows,
            n_clusters=args.clusters,
            skew=args.skew,
            label=args.label,
        )
    elif args.kind == "scaling":
        tables = scaling_instance(args.seed, rows=args.rows, n_clusters=args.clusters)
    elif args.kind == "tiered":
        tables = tiered_instance(args.seed, join_target=args.join_target)
    else:  # pragma: no cover - argparse choices guard this
        raise ValueError(f"unknown kind {args.kind}")
    spec = write_instance(tables, args.out, name=args.name)
    print(spec)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relcoreset", description=__doc__)
    p.add_argument("--json-errors", action="store_true", help="emit errors as JSON on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(func=fn)
        sp.add_argument("--report", help="write a JSON run report here")
        return sp

    def add_threads(sp):
        sp.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("RELCORESET_THREADS", "1")),
            help="worker threads for grid counting (identical output for any value)",
        )

    sp = add("validate", cmd_validate, help="check the join is acyclic and print its size")
    sp.add_argument("--spec", required=True)

    sp = add("materialize", cmd_materialize, help="write the full join (oracle; capped)")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--cap", type=int, default=10**7)

    sp = add("count", cmd_count, help="count join tuples, optionally inside pseudo-cubes")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--cube", help="JSON file with cube(s): tables, center, radius")

    sp = add("sample", cmd_sample, help="draw uniform join tuples")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--cube")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    sp = add("build", cmd_build, help="grow the aggregation tree, write the root summary")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--level-factor", choices=("paper", "tight"), default="paper")
    sp.add_argument("--out", required=True)
    add_threads(sp)

    sp = add("weigh", cmd_weigh, help="turn a root summary into a weighted coreset")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--summary", required=True)
    sp.add_argument("--eps1", type=float, default=0.2)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--m-cap", type=int, default=10**6)
    sp.add_argument("--m-override", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.add_argument("--meta", help="write weighting diagnostics JSON here")

    sp = add("coreset", cmd_coreset, help="full pipeline: build + weigh (per class when labeled)")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--eps1", type=float, default=0.2)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--label-feature")
    sp.add_argument("--level-factor", choices=("paper", "tight"), default="paper")
    sp.add_argument("--m-cap", type=int, default=10**6)
    sp.add_argument("--m-override", type=int, default=None)
    sp.add_argument("--out", required=True)
    add_threads(sp)

    sp = add("train", cmd_train, help="fit a downstream model on weighted points")
    sp.add_argument("--model", choices=("kmeans", "logistic", "svm"), required=True)
    sp.add_argument("--data", required=True, help="CSV with optional 'weight' column")
    sp.add_argument("--label-col")
    sp.add_argument("--k-clusters", type=int, default=8)
    sp.add_argument("--reg", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = add("evaluate", cmd_evaluate, help="compare coreset objective against the oracle")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--coreset", required=True)
    sp.add_argument("--theta", required=True)
    sp.add_argument("--label-feature")
    sp.add_argument("--oracle", action="store_true", help="materialize the join for the exact objective")
    sp.add_argument("--cap", type=int, default=10**7)
    sp.add_argument("--eps1", type=float, default=0.2)
    sp.add_argument("--reg", type=float, default=1e-3)
    sp.add_argument("--radius", type=float, help="certified cover radius for the corridor check")
    sp.add_argument("--meta", help="weighting diagnostics JSON (source of the radius)")

    sp = add("synth", cmd_synth, help="generate a synthetic instance")
    sp.add_argument("--kind", choices=("random", "cyclic", "manifold", "clusters", "scaling", "tiered"), required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--name", default="instance")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rows", type=int, default=1000)
    sp.add_argument("--s", type=int, default=None)
    sp.add_argument("--clusters", type=int, default=10)
    sp.add_argument("--skew", type=float, default=0.8)
    sp.add_argument("--key-domain", type=int, default=4)
    sp.add_argument("--label", action="store_true")
    sp.add_argument("--join-target", type=int, default=1_240_000, help="approximate join size for --kind tiered")

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LoadError as exc:
        return _fail(args, exc, EXIT_IO)
    except (FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        return _fail(args, exc, EXIT_IO)
    except (CyclicError, ValueError, KeyError) as exc:
        return _fail(args, exc, EXIT_VALIDATION)
    except (
        BuildError,
        CountOverflowError,
        EmptyRegionError,
        MaterializeCapError,
        TrainingDivergedError,
    ) as exc:
        return _fail(args, exc, EXIT_RUNTIME)


def _fail(args, exc: Exception, code: int) -> int:
    if getattr(args, "json_errors", False):
        payload = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
