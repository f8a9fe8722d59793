"""Command-line front end.

Every command reads its inputs fully before computing, writes its artifacts
atomically into ``--out`` (a directory), and exits with 0 on success, 1 when
a construction was built (or refused) but a checked inequality failed, and 2
on bad input.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .embedding import amalgamate, amalgamation_bounds, family_from_coarse_embedding, frechet_embedding, verify_conditions
from .gluing import GlueError, GlueInput, frechet_provider, glue_family, glue_two, scaled_coordinates_provider
from .lp import BlockVector, convexity_modulus_estimate, mazur_map, p_norm
from .metric import MetricError, SubsetPair, ball_core, check_metric, compression_moduli
from .relhyp import (
    BudgetExceeded,
    FreeProductGroup,
    SeparationFailure,
    bcp_constant,
    bfs_relative_capped,
    bfs_s,
    check_coset_decomposition,
    constant_phi,
    coset_representatives,
    embed_ball,
    estimate_bcp,
    scaled_identity_phi,
    slim_triangle_check,
)

OK, FAILED, BAD_INPUT = 0, 1, 2
DEFAULT_SEED = 0


class Job:
    """Collects artifacts for one invocation and writes the manifest."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.written: list[Path] = []

    def header(self) -> dict:
        return {"command": self.args.command, "seed": self.args.seed}

    def json(self, name: str, doc: dict) -> Path:
        doc = dict(self.header(), **doc)
        path = io.write_json(self.out / name, doc)
        self.written.append(path)
        return path

    def text(self, name: str, text: str) -> Path:
        path = io.write_atomic(self.out / name, text)
        self.written.append(path)
        return path

    def finish(self, status: int) -> int:
        if self.args.manifest:
            entries = [{"path": p.name, "sha256": io.sha256(p)} for p in self.written]
            io.write_json(self.out / "manifest.json", dict(self.header(), status=status, artifacts=entries))
        return status


def _require_input(args):
    if not args.input:
        raise io.InputError(f"{args.command} needs --input")
    return args.input


# --------------------------------------------------------------------------
# commands


def cmd_check_metric(job: Job) -> int:
    labels, arr = io.read_matrix(_require_input(job.args))
    report = check_metric(arr, labels)
    job.json(
        "metric_report.json",
        {
            "valid": report.valid,
            "points": len(labels),
            "summary": report.summary(),
            "violations": [{"axiom": v.axiom, "points": [str(x) for x in v.points]} for v in report.violations],
        },
    )
    return OK if report.valid else FAILED


def cmd_moduli(job: Job) -> int:
    doc = io.read_json(_require_input(job.args))
    cmap = io.map_from_doc(doc)
    table = compression_moduli(cmap)
    job.text("moduli.csv", table.to_csv())
    job.json("moduli.json", {"points": len(cmap.space), "rows": [list(r) for r in table.rows()]})
    return OK


def cmd_amalgamate(job: Job) -> int:
    args = job.args
    doc = io.read_json(_require_input(args))
    if "images" in doc or "coords" in doc:
        psi = io.map_from_doc(doc)
    else:
        psi = frechet_embedding(io.space_from_doc(doc.get("space", doc)), args.p)
    family = family_from_coarse_embedding(psi, delta=args.delta, n_members=args.n)
    phi = amalgamate(family)
    bounds = amalgamation_bounds(family, phi)
    job.json(
        "amalgamation.json",
        {
            "delta": family.delta,
            "basepoint": str(family.basepoint),
            "members": [{"n": m.n, "R": m.R, "eps": m.eps, "s": m.s} for m in family.members],
            "bounds": {
                "ok": bounds.ok,
                "pairs": bounds.pairs,
                "upper_violations": [[str(x) for x in v] for v in bounds.upper_violations],
                "lower_violations": [[str(x) for x in v] for v in bounds.lower_violations],
                "upper_worst_margin": bounds.upper_worst_margin,
                "lower_worst_margin": bounds.lower_worst_margin,
            },
            "map": phi.to_json(),
        },
    )
    return OK if bounds.ok else FAILED


def _glue_embedder(spec, p, eps, scales, by_str):
    spec = spec or {"type": "frechet"}
    kind = spec.get("type", "frechet")
    if kind == "frechet":
        return frechet_provider(eps, scales, p)
    if kind == "coords":
        coords = {by_str[str(k)]: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in spec["coords"].items()}
        return scaled_coordinates_provider(coords, scales, float(spec.get("factor", 2.0)), p)
    raise io.InputError(f"unknown embedder type {kind!r}")


def _per_scale_core(sets: dict):
    """``C(s)`` is the listed set with the largest key ``<= s`` (empty below every key)."""
    keys = sorted(sets)

    def core(s):
        below = [k for k in keys if k <= s]
        return sets[below[-1]] if below else frozenset()

    return core


def cmd_glue(job: Job) -> int:
    args = job.args
    doc = io.read_json(_require_input(args))
    space = io.space_from_doc(doc["space"] if "space" in doc else doc)
    by_str = {str(x): x for x in space.labels}
    try:
        parts = tuple(frozenset(by_str[str(x)] for x in part) for part in doc["parts"])
    except KeyError as exc:
        raise io.InputError(f"glue job: missing field or unknown point {exc}") from exc
    core_doc = doc.get("core")
    if core_doc is None:
        core = None
    elif core_doc.get("type", "ball") == "ball":
        core = ball_core(space, by_str[str(core_doc["center"])])
    elif core_doc["type"] == "fixed":
        pts = frozenset(by_str[str(x)] for x in core_doc["points"])
        core = lambda s: pts  # noqa: E731
    elif core_doc["type"] == "per_scale":
        core = _per_scale_core({float(k): frozenset(by_str[str(x)] for x in v) for k, v in core_doc["sets"].items()})
    else:
        raise io.InputError(f"unknown core type {core_doc['type']!r}")
    p = float(doc.get("p", args.p))
    R = float(args.R if args.R is not None else doc.get("R", 1.0))
    eps = float(args.eps if args.eps is not None else doc.get("eps", 1.0))
    scales = [float(s) for s in doc.get("scales", range(1, int(2 * math.ceil(space.diameter)) + 4))]
    specs = doc.get("embedders") or [None] * len(parts)
    if len(specs) != len(parts):
        raise io.InputError("one embedder per part")
    pair = SubsetPair(space, parts, core)
    inp = GlueInput(pair, tuple(_glue_embedder(s, p, eps, scales, by_str) for s in specs), p)
    kind = doc.get("kind", "two" if len(parts) == 2 else "family")
    try:
        res = glue_two(inp, R, eps) if kind == "two" else glue_family(inp, R, eps)
    except GlueError as exc:
        job.json("glue.json", {"ok": False, "refused": str(exc), "witness": exc.witness, "R": R, "eps": eps})
        return FAILED
    delta, s_star = res.verification_params()
    report = verify_conditions(res.map, R, eps, delta, s_star)
    ok = report.ok and res.partition_ok()
    job.json(
        "glue.json",
        {
            "ok": ok,
            "R": R,
            "eps": eps,
            "p": p,
            "result": res.to_json(),
            "partition_ok": res.partition_ok(),
            "verification": report.to_json(),
            "map": res.map.to_json(),
        },
    )
    return OK if ok else FAILED


def _group_from(args) -> tuple[FreeProductGroup, dict]:
    doc = io.read_json(_require_input(args))
    try:
        G = FreeProductGroup(int(doc["factorA_rank"]), int(doc["factorB_rank"]))
    except KeyError as exc:
        raise io.InputError(f"group spec needs {exc}") from exc
    return G, doc


def _cap(args, default: int) -> int:
    return int(args.cap if args.cap is not None else default)


def cmd_group_ball(job: Job) -> int:
    args = job.args
    G, _ = _group_from(args)
    n = int(args.n if args.n is not None else 1)
    cap = _cap(args, max(n, 3))
    if cap < n:
        raise io.InputError("cap must be at least n")
    ball = G.enumerate_ball(n, cap)
    if len(ball) > args.budget:
        raise BudgetExceeded(f"ball has {len(ball)} elements, budget is {args.budget}")
    doc = {"n": n, "cap": cap, "size": len(ball), "elements": [str(g) for g in ball]}
    ok = True
    if n >= 1:
        dec = check_coset_decomposition(G, n, cap)
        doc["coset_representatives"] = [str(g) for g in coset_representatives(G, n, cap)]
        doc["decomposition"] = {"ok": dec.ok, "covered": dec.covered, "overlaps": len(dec.overlaps), "missing": len(dec.missing)}
        ok = dec.ok
    if args.radius is not None:
        r = int(args.radius)
        s_dist = bfs_s(G, max(r, cap))
        rel = bfs_relative_capped(G, max(r, cap), s_dist=s_dist)
        bad = [str(g) for g, d in s_dist.items() if d <= r and (d != g.abs_length or rel[g] != g.rel_length)]
        doc["oracle"] = {"radius": r, "cap": max(r, cap), "checked": sum(1 for d in s_dist.values() if d <= r), "mismatches": bad}
        ok = ok and not bad
    job.json("group_ball.json", doc)
    return OK if ok else FAILED


def cmd_group_bcp(job: Job) -> int:
    args = job.args
    G, _ = _group_from(args)
    R = int(args.R if args.R is not None else 1)
    radius = int(args.radius if args.radius is not None else _cap(args, max(R, 4)))
    est = estimate_bcp(G, R, radius, args.budget)
    const = bcp_constant(G, R, radius, budget=args.budget)
    doc = {"estimate": est.to_json(), "constant": const.to_json()}
    ok = True
    if args.delta is not None:
        slim = slim_triangle_check(G, args.delta, samples=args.samples, radius=min(radius, 4), seed=args.seed, budget=args.budget)
        doc["slim_triangles"] = slim.to_json()
        ok = slim.ok
    job.json("group_bcp.json", doc)
    return OK if ok else FAILED


def cmd_group_embed(job: Job) -> int:
    args = job.args
    G, doc = _group_from(args)
    n = int(args.n if args.n is not None else 2)
    cap = _cap(args, 4)
    R = int(args.R if args.R is not None else 1)
    eps = float(args.eps if args.eps is not None else 1.0)
    phi_doc = doc.get("phi_H", {"type": "scaled_identity", "scale": 1.0})
    kind = phi_doc.get("type")
    if kind == "scaled_identity":
        phi_H = scaled_identity_phi(G, cap, float(phi_doc.get("scale", 1.0)), args.p)
    elif kind == "constant":
        phi_H = constant_phi(G, cap, args.p)
    else:
        raise io.InputError(f"unknown phi_H type {kind!r}")
    if len(G.enumerate_ball(n, cap)) > args.budget:
        raise BudgetExceeded(f"B({n}) under cap {cap} exceeds the budget {args.budget}")
    try:
        be = embed_ball(G, n, cap, phi_H, R=R, eps=eps, budget=args.budget)
    except SeparationFailure as exc:
        sep = exc.check
        job.json("group_embed.json", {"ok": False, "refused": str(exc), "witness": sep.witness, "distance": sep.distance})
        return FAILED
    report = be.verify()
    ident = be.case_identities()
    ok = report.ok and ident["ok"] and be.slots_ok()
    out = be.to_json()
    out.update(ok=ok, verification=report.to_json(), case_identities=ident, slots_ok=be.slots_ok(), phi_H=phi_doc)
    job.json("group_embed.json", out)
    return OK if ok else FAILED


def cmd_mazur(job: Job) -> int:
    args = job.args
    p = float(args.p)
    q = float(args.q)
    if args.input:
        raw = io.read_json(args.input)
        vectors = [np.asarray(v, dtype=float) for v in (raw["vectors"] if isinstance(raw, dict) else raw)]
    else:
        rng = np.random.default_rng(args.seed)
        vectors = [rng.standard_normal(rng.integers(1, 9)) for _ in range(args.samples)]
    worst = 0.0
    for v in vectors:
        bv = BlockVector.single(p, v)
        lhs = p_norm(mazur_map(bv, q))
        rhs = p_norm(bv) ** (p / q)
        worst = max(worst, abs(lhs - rhs) / max(rhs, 1e-300))
    eps_values = [args.eps] if args.eps is not None else [0.5, 1.0, 1.5]
    moduli = []
    for e in eps_values:
        est = convexity_modulus_estimate(p, e, seed=args.seed)
        moduli.append({"eps": e, "delta": est.delta, "samples": est.samples})
    ok = worst <= 1e-12
    job.json("mazur.json", {"p": p, "q": q, "vectors": len(vectors), "max_relative_error": worst, "ok": ok, "convexity": moduli})
    return OK if ok else FAILED


COMMANDS = {
    "check-metric": cmd_check_metric,
    "moduli": cmd_moduli,
    "amalgamate": cmd_amalgamate,
    "glue": cmd_glue,
    "group-ball": cmd_group_ball,
    "group-bcp": cmd_group_bcp,
    "group-embed": cmd_group_embed,
    "mazur": cmd_mazur,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarsembed", description="Finite-scale coarse embedding toolkit.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--input", help="input file (JSON; check-metric also reads CSV)")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    parser.add_argument("--p", type=float, default=2.0, help="target exponent")
    parser.add_argument("--q", type=float, default=3.0, help="second exponent for mazur")
    parser.add_argument("--R", type=float, default=None, help="scale R")
    parser.add_argument("--eps", type=float, default=None, help="tolerance epsilon")
    parser.add_argument("--delta", type=float, default=None, help="separation delta (amalgamate) or slimness (group-bcp)")
    parser.add_argument("--n", type=int, default=None, help="ball radius (group commands) or number of scale members")
    parser.add_argument("--cap", type=int, default=None, help="absolute-length cap for group computations")
    parser.add_argument("--radius", type=int, default=None, help="search radius (group-bcp) or oracle radius (group-ball)")
    parser.add_argument("--samples", type=int, default=200, help="random samples for sampled checks")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed, echoed in every artifact")
    parser.add_argument("--budget", type=int, default=200_000, help="largest element set a group search may touch")
    parser.add_argument("--manifest", action="store_true", help="also write manifest.json indexing the artifacts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = Job(args)
    try:
        status = COMMANDS[args.command](job)
    except (io.InputError, MetricError, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: bad input: {exc}", file=sys.stderr)
        return BAD_INPUT
    print(f"{args.command}: {'ok' if status == OK else 'refused or failed a check'} -> {job.out}", file=sys.stderr)
    return job.finish(status)


if __name__ == "__main__":
    sys.exit(main())
