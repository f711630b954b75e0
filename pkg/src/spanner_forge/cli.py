"""Batch experiment driver.

Subcommands: ``generate`` (emit an instance with optional witness and
metadata sidecar), ``build`` (construct a spanner with a chosen
builder), ``verify`` (exact stretch check of an edge list), ``compare``
(all requested builders on one instance, one report row each), and
``sweep`` (a builder comparison across an eps grid with a log-log slope
estimate).  Reports are JSON for single runs and CSV for sweeps; every
report embeds the fully resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .geom import PointSet, normalize
from .graph import (
    MetricsReport,
    RefusedTooLarge,
    SpannerGraph,
    VERIFY_N_MAX,
    metrics,
    path_greedy,
    read_edge_list,
    verify_stretch,
    write_edge_list,
)
from .instances import (
    GeneratedInstance,
    gen_lightness_lb,
    gen_lightness_lb_x,
    gen_motivating,
    gen_random,
    gen_sparsity_lb,
    gen_sparsity_lb_x,
    tile_copies,
)
from .nets import build_hierarchy, build_net_tree_spanner
from .prune import PruneParams, greedy_prune


class ParseError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}: line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class ExperimentConfig:
    """Fully resolved settings of one driver invocation."""

    command: str
    instance: str | None = None
    family: str | None = None
    eps: float | None = None
    x: float | None = None
    n: int | None = None
    d: int | None = None
    seed: int | None = None
    builder: str | None = None
    builders: list = field(default_factory=list)
    k: int | None = None
    t: float | None = None
    n_max: int = VERIFY_N_MAX
    force: bool = False
    out: str | None = None
    prune: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


_FAMILIES = {
    "sparsity-lb": lambda a: gen_sparsity_lb(a.eps),
    "sparsity-lb-x": lambda a: gen_sparsity_lb_x(a.eps, a.x),
    "lightness-lb": lambda a: gen_lightness_lb(a.eps),
    "lightness-lb-x": lambda a: gen_lightness_lb_x(a.eps, a.x),
    "motivating": lambda a: gen_motivating(a.eps),
    "random": lambda a: gen_random(a.n, a.d, a.distribution, a.seed),
}


def write_pointset(X: PointSet, path) -> None:
    """Instance file: header "d n", then one coordinate row per point."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{X.dim} {X.n}\n")
        for row in X.coords:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def parse_pointset(path) -> PointSet:
    """Read an instance file written by :func:`write_pointset`."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise ParseError(path, 1, "empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise ParseError(path, 1, "header must be 'd n'")
    try:
        d, n = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError(path, 1, "header must be two integers") from None
    rows = []
    lineno = 1
    for raw in lines[1:]:
        lineno += 1
        raw = raw.strip()
        if not raw:
            continue
        parts = raw.split()
        if len(parts) != d:
            raise ParseError(path, lineno, f"expected {d} coordinates")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ParseError(path, lineno, "bad coordinate") from None
        if len(rows) > n:
            raise ParseError(path, lineno, f"more than {n} rows")
    if len(rows) < n:
        raise ParseError(path, len(lines) + 1, f"expected {n} rows, got {len(rows)}")
    return PointSet(np.array(rows, dtype=np.float64))


def write_report(report: dict, path) -> None:
    """Single-run reports are JSON; a list of row dicts becomes CSV."""
    path = str(path)
    if path.endswith(".csv"):
        rows = report["rows"] if isinstance(report, dict) else report
        if not rows:
            raise ValueError("no rows to write")
        keys = list(rows[0].keys())
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for row in rows:
                w.writerow(row)
    else:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _witness_path(instance_path: str) -> str:
    return instance_path + ".witness"


def _meta_path(instance_path: str) -> str:
    return instance_path + ".meta.json"


def _prune_params_from_args(args) -> PruneParams:
    if getattr(args, "config", None):
        base = PruneParams.from_config_file(args.config).to_dict()
    else:
        base = {}
    base["eps"] = args.eps
    for name in (
        "delta",
        "alpha",
        "kappa",
        "kappa_eff",
        "alpha_log_const",
        "logstar_const",
    ):
        val = getattr(args, name, None)
        if val is not None:
            base[name] = val
    for name in ("candidate_mode", "constant_mode", "hop_cap"):
        val = getattr(args, name, None)
        if val is not None:
            base[name] = val
    if getattr(args, "k", None):
        base["iterations"] = max(1, args.k)
    return PruneParams(**base)


def _build_spanner(name: str, X: PointSet, args, witness_pairs=None) -> SpannerGraph:
    if name == "greedy":
        return path_greedy(X, 1.0 + args.eps)
    if name == "net-tree":
        return build_net_tree_spanner(build_hierarchy(X), args.eps)
    if name == "prune":
        params = _prune_params_from_args(args)
        out, _ = greedy_prune(X, args.eps, args.k or 1, params=params)
        return out
    if name == "witness":
        if witness_pairs is None:
            raise ValueError("no witness available for this instance")
        return SpannerGraph.from_pairs(X, witness_pairs)
    raise ValueError(f"unknown builder {name!r}")


def _load_witness(args, X: PointSet):
    path = getattr(args, "witness", None) or _witness_path(args.infile)
    if os.path.exists(path):
        return [(u, v) for u, v, _ in read_edge_list(path, X).edges]
    return None


def _metric_row(builder: str, rep: MetricsReport) -> dict:
    row = {"builder": builder}
    row.update(rep.to_dict())
    return row


def _loglog_slope(inv_eps, values) -> float:
    xs = np.log(np.asarray(inv_eps, dtype=float))
    ys = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(xs, ys, 1)[0])


def _cmd_generate(args) -> int:
    inst: GeneratedInstance = _FAMILIES[args.family](args)
    if args.copies > 1:
        inst = tile_copies(inst, args.copies)
    write_pointset(inst.points, args.out)
    if inst.witness_pairs is not None:
        W = SpannerGraph.from_pairs(inst.points, inst.witness_pairs)
        write_edge_list(W, _witness_path(args.out))
    meta = {"config": _config_of(args).to_dict(), "meta": inst.meta}
    write_report(meta, _meta_path(args.out))
    print(f"wrote {inst.points.n} points to {args.out}")
    return 0


def _cmd_build(args) -> int:
    X = normalize(parse_pointset(args.infile))
    witness = _load_witness(args, X)
    G = _build_spanner(args.builder, X, args, witness)
    write_edge_list(G, args.out)
    print(f"{args.builder}: {len(G.edges)} edges -> {args.out}")
    return 0


def _cmd_verify(args) -> int:
    X = normalize(parse_pointset(args.infile))
    G = read_edge_list(args.edges, X)
    try:
        ms, wit = verify_stretch(G, X, n_max=args.n_max, force=args.force)
    except RefusedTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    ok = ms <= args.t + 1e-9
    report = {
        "config": _config_of(args).to_dict(),
        "timestamp": time.time(),
        "max_stretch": ms,
        "witness_pair": list(wit),
        "bound": args.t,
        "ok": bool(ok),
    }
    if args.out:
        write_report(report, args.out)
    print(f"max stretch {ms:.9f} vs bound {args.t}: {'OK' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_compare(args) -> int:
    X = normalize(parse_pointset(args.infile))
    witness = _load_witness(args, X)
    rows = []
    failures = 0
    base = None
    for name in args.builders:
        G = _build_spanner(name, X, args, witness)
        rep = metrics(G, X, force=args.force)
        row = _metric_row(name, rep)
        if name == "witness":
            base = rep
        rows.append(row)
    for row in rows:
        if base is not None and base.edge_count:
            row["edge_ratio_vs_witness"] = row["edge_count"] / base.edge_count
            row["weight_ratio_vs_witness"] = row["weight"] / base.weight
        bound = 1.0 + args.eps * (args.x or 1.0)
        row["ok"] = bool(row["max_stretch"] <= bound + 1e-9)
        failures += not row["ok"]
    report = {
        "config": _config_of(args).to_dict(),
        "timestamp": time.time(),
        "rows": rows,
    }
    if args.out:
        write_report(report, args.out)
    for row in rows:
        print(
            f"{row['builder']:>9}: edges={row['edge_count']:6d} "
            f"weight={row['weight']:.4f} stretch={row['max_stretch']:.6f}"
        )
    return 1 if failures else 0


def _cmd_sweep(args) -> int:
    rows = []
    failures = 0
    for eps in args.eps_list:
        for x in args.x_list or [None]:
            sub = argparse.Namespace(**vars(args))
            sub.eps = eps
            sub.x = x
            inst = _FAMILIES[args.family](sub)
            X = normalize(inst.points)
            for name in args.builders:
                G = _build_spanner(name, X, sub, inst.witness_pairs)
                rep = metrics(G, X, force=args.force)
                row = {"eps": eps, "x": x if x is not None else ""}
                row.update(_metric_row(name, rep))
                row["witness_pair"] = f"{rep.witness_pair[0]}-{rep.witness_pair[1]}"
                bound = 1.0 + eps * (x or 1.0)
                row["ok"] = rep.max_stretch <= bound + 1e-9
                failures += not row["ok"]
                rows.append(row)
    if args.out:
        write_report(rows, args.out)
    slope = None
    ratio_kind = "weight" if "lightness" in args.family else "edge_count"
    per_eps: dict = {}
    for row in rows:
        per_eps.setdefault(row["eps"], {})[row["builder"]] = row
    if all(len(v) >= 2 and "greedy" in v and "witness" in v for v in per_eps.values()):
        invs, vals = [], []
        for eps in sorted(per_eps, reverse=True):
            g, w = per_eps[eps]["greedy"], per_eps[eps]["witness"]
            invs.append(1.0 / eps)
            vals.append(g[ratio_kind] / w[ratio_kind])
        if len(invs) >= 2:
            slope = _loglog_slope(invs, vals)
            print(f"log-log slope of greedy/witness {ratio_kind} ratio vs 1/eps: {slope:.3f}")
    if args.gnuplot and args.out:
        _write_gnuplot(args.gnuplot, args.out, ratio_kind)
    if args.summary_out:
        write_report(
            {
                "config": _config_of(args).to_dict(),
                "timestamp": time.time(),
                "slope": slope,
                "rows": rows,
            },
            args.summary_out,
        )
    return 1 if failures else 0


def _write_gnuplot(path, csv_path, ratio_kind) -> None:
    script = (
        "set datafile separator ','\n"
        "set logscale xy\n"
        f"set xlabel '1/eps'\nset ylabel 'greedy/{ratio_kind} ratio'\n"
        f"plot '{csv_path}' using (1/column('eps')):(column('{ratio_kind}')) with linespoints\n"
    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write(script)


def _config_of(args) -> ExperimentConfig:
    return ExperimentConfig(
        command=args.command,
        instance=getattr(args, "infile", None),
        family=getattr(args, "family", None),
        eps=getattr(args, "eps", None),
        x=getattr(args, "x", None),
        n=getattr(args, "n", None),
        d=getattr(args, "d", None),
        seed=getattr(args, "seed", None),
        builder=getattr(args, "builder", None),
        builders=list(getattr(args, "builders", []) or []),
        k=getattr(args, "k", None),
        t=getattr(args, "t", None),
        n_max=getattr(args, "n_max", VERIFY_N_MAX),
        force=getattr(args, "force", False),
        out=getattr(args, "out", None),
        prune={
            k: getattr(args, k)
            for k in (
                "delta",
                "alpha",
                "kappa",
                "kappa_eff",
                "candidate_mode",
                "constant_mode",
                "alpha_log_const",
                "logstar_const",
                "hop_cap",
                "config",
            )
            if getattr(args, k, None) is not None
        },
    )


def _add_prune_flags(p) -> None:
    p.add_argument("--config", help="key=value file with pruning parameters")
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--kappa-eff", dest="kappa_eff", type=float)
    p.add_argument("--candidate-mode", dest="candidate_mode", choices=["exact", "fast"])
    p.add_argument(
        "--constant-mode", dest="constant_mode", choices=["practical", "theoretical"]
    )
    p.add_argument("--alpha-log-const", dest="alpha_log_const", type=float)
    p.add_argument("--logstar-const", dest="logstar_const", type=float)
    p.add_argument("--hop-cap", dest="hop_cap", type=int)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spanner-forge")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit an instance file")
    g.add_argument("--family", required=True, choices=sorted(_FAMILIES))
    g.add_argument("--eps", type=float, default=0.01)
    g.add_argument("--x", type=float, default=1.0)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--distribution", choices=["uniform", "clustered"], default="uniform")
    g.add_argument("--copies", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    b = sub.add_parser("build", help="build a spanner over an instance")
    b.add_argument("--builder", required=True, choices=["greedy", "net-tree", "prune", "witness"])
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--x", type=float)
    b.add_argument("--k", type=int, default=1)
    b.add_argument("--in", dest="infile", required=True)
    b.add_argument("--witness")
    b.add_argument("--out", required=True)
    _add_prune_flags(b)
    b.set_defaults(func=_cmd_build)

    v = sub.add_parser("verify", help="exact stretch check of an edge list")
    v.add_argument("--in", dest="infile", required=True)
    v.add_argument("--edges", required=True)
    v.add_argument("--t", type=float, required=True)
    v.add_argument("--n-max", dest="n_max", type=int, default=VERIFY_N_MAX)
    v.add_argument("--force", action="store_true")
    v.add_argument("--out")
    v.set_defaults(func=_cmd_verify)

    c = sub.add_parser("compare", help="run several builders on one instance")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--x", type=float)
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--builders", type=lambda s: s.split(","), required=True)
    c.add_argument("--witness")
    c.add_argument("--force", action="store_true")
    c.add_argument("--out")
    _add_prune_flags(c)
    c.set_defaults(func=_cmd_compare)

    s = sub.add_parser("sweep", help="builder comparison across an eps grid")
    s.add_argument("--family", required=True, choices=sorted(_FAMILIES))
    s.add_argument("--eps-list", dest="eps_list", type=lambda v: [float(x) for x in v.split(",")], required=True)
    s.add_argument("--x-list", dest="x_list", type=lambda v: [float(x) for x in v.split(",")])
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--distribution", choices=["uniform", "clustered"], default="uniform")
    s.add_argument("--builders", type=lambda v: v.split(","), default=["greedy", "witness"])
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--force", action="store_true")
    s.add_argument("--out")
    s.add_argument("--summary-out", dest="summary_out")
    s.add_argument("--gnuplot")
    _add_prune_flags(s)
    s.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
