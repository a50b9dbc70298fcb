"""Command-line orchestration: sampling runs, verification, experiments.

Everything is deterministic given (config, seed): replica generators are
spawned from the master seed, CSV/JSON writers use repr-stable formatting,
and no timestamps enter the outputs.  Replicas parallelise over a process
pool when --threads > 1 without changing any output byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import degrees as dg
from . import boltzmann as bz
from .forest import decode_forest, sample_degree_bridge, vervaat_shift
from .labels import decompose_labels, decorate
from .mapping import build_map, reroot_to_uniform, verify_euler
from .metrics import bfs_distances, check_cactus
from .offspring import OffspringLaw, WeightSequence, offspring_from_weights

SCHEMA_VERSION = 1
ENV_THREADS = "PLANARMAPS_THREADS"


class ConfigError(ValueError):
    pass


def load_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    sizes = cfg.get("sizes", [])
    if sorted(sizes) != sizes or len(set(sizes)) != len(sizes):
        raise ConfigError("sizes must be strictly increasing")
    if cfg.get("replicas", 1) < 1:
        raise ConfigError("replicas must be >= 1")
    return cfg


def _rho_for(cfg: dict, n: int, d_counts: dict[int, int]) -> int:
    rule = cfg.get("rho", {"rule": "constant", "value": 1})
    kind = rule.get("rule", "constant")
    if kind == "constant":
        return int(rule.get("value", 1))
    if kind == "sigma":
        sigma2 = sum(k * (k - 1) * c for k, c in d_counts.items())
        return max(1, round(rule.get("factor", 1.0) * math.sqrt(sigma2)))
    if kind == "power":
        return max(1, round(n ** rule.get("exponent", 0.5)))
    raise ConfigError(f"unknown rho rule {kind!r}")


def _degree_sequence(cfg: dict, n: int) -> dg.DegreeSequence:
    model = cfg["model"]
    fam = model.get("family", "quadrangulation")
    if "counts" in model:
        counts = {int(k): int(c) * n for k, c in model["counts"].items()}
    elif fam == "quadrangulation":
        counts = {2: n}
    elif fam == "q_angulation":
        counts = {int(model["q"]): n}
    else:
        raise ConfigError(f"unknown prescribed family {fam!r}")
    return dg.DegreeSequence(counts, _rho_for(cfg, n, counts))


def _law(model: dict) -> OffspringLaw:
    fam = model["family"]
    params = model.get("params", {})
    if fam == "geometric":
        return OffspringLaw.geometric()
    if fam == "stable":
        return OffspringLaw.stable(params["alpha"], params["c"])
    if fam in ("cauchy_loc", "cauchy_tail"):
        return OffspringLaw.cauchy_loc(params.get("c", 1.0 / 3.0))
    if fam == "subcritical":
        return OffspringLaw.subcritical(params["beta"], params["mean"])
    if fam == "weights":
        return offspring_from_weights(WeightSequence({int(k): v for k, v in params["q"].items()}))
    raise ConfigError(f"unknown boltzmann family {fam!r}")


def _instance(cfg: dict, n: int, rng: np.random.Generator):
    """One replica: returns (kind-specific dict with forest, labels, map...)."""
    model = cfg["model"]
    out = {}
    if model.get("kind", "prescribed") == "prescribed":
        d = _degree_sequence(cfg, n)
        w = vervaat_shift(sample_degree_bridge(d, rng), rng)
        f = decode_forest(w)
        lf = decorate(f, rng)
        out.update(d=d, lf=lf, walk=None)
    else:
        law = _law(model)
        s = model.get("conditioning", "F")
        a_set = bz.JumpSet.for_conditioning(s, model.get("A"))
        rho = _rho_for(cfg, n, {})
        cw = bz.sample_conditioned_walk(law, n, rho, a_set, rng,
                                        budget=int(cfg.get("budget", 10**6)))
        f = decode_forest(cw.path)
        lf = decorate(f, rng)
        counts = {}
        for k in np.unique(f.out_degree[f.out_degree > 0]):
            counts[int(k)] = int((f.out_degree == k).sum())
        out.update(d=dg.DegreeSequence(counts, f.rho), lf=lf, walk=cw, law=law, a_set=a_set)
    return out


# -- sample -----------------------------------------------------------------------


def cmd_sample(cfg: dict, seed: int, outdir: Path, threads: int) -> int:
    jobs = _jobs(cfg, seed)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for res in _run_jobs(_sample_one, jobs, cfg, threads):
        for name, text in res.pop("_files").items():
            (outdir / name).write_text(text)
        manifest.append(res)
    (outdir / "manifest.json").write_text(
        _dump_json({"schema": SCHEMA_VERSION, "seed": seed, "runs": manifest})
    )
    return 0


def _sample_one(cfg, n, rep, rng):
    inst = _instance(cfg, n, rng)
    lf = inst["lf"]
    pm = build_map(lf)
    rep_ok = verify_euler(pm, inst["d"])
    tag = f"n{n}_r{rep}"
    files = {
        f"forest_{tag}.txt": lf.forest.to_text(),
        f"labels_{tag}.txt": " ".join(str(int(x)) for x in lf.label) + "\n",
        f"map_{tag}.txt": pm.hmap.to_text(),
        f"edges_{tag}.txt": pm.hmap.edge_list_text(),
    }
    out = {
        "n": n,
        "replica": rep,
        "rho": int(lf.forest.rho),
        "euler_pass": bool(rep_ok["pass"]),
        "_files": files,
    }
    if inst.get("walk") is not None:
        out["attempts"] = inst["walk"].attempts
        out["method"] = inst["walk"].method
    return out


# -- verify -----------------------------------------------------------------------


def cmd_verify(cfg: dict, seed: int, outdir: Path, threads: int, inject: str | None = None) -> int:
    jobs = _jobs(cfg, seed)
    outdir.mkdir(parents=True, exist_ok=True)
    failures = []
    reports = []
    for (n, rep, rng) in jobs:
        rec = {"n": n, "replica": rep, "seed": seed}
        try:
            checks = _verify_one(cfg, n, rep, rng, inject)
            rec.update(checks)
            if not all(v for k, v in checks.items() if k.endswith("_ok")):
                failures.append(rec)
        except Exception as exc:  # corrupted instances may be rejected upstream
            rec["error"] = f"{type(exc).__name__}: {exc}"
            failures.append(rec)
        reports.append(rec)
    payload = {"schema": SCHEMA_VERSION, "pass": not failures, "reports": reports}
    (outdir / "verify.json").write_text(_dump_json(payload))
    for rec in reports:
        status = "ok" if rec not in failures else "FAIL"
        print(f"verify n={rec['n']} replica={rec['replica']}: {status}")
    if failures:
        f0 = failures[0]
        print(
            f"reproduce with: seed={seed} n={f0['n']} replica={f0['replica']}",
            file=sys.stderr,
        )
        return 1
    return 0


def _verify_one(cfg, n, rep, rng, inject=None):
    inst = _instance(cfg, n, rng)
    lf = inst["lf"]
    f = lf.forest
    checks = {}
    if inject == "label-corruption":
        leaves = np.flatnonzero(f.out_degree == 0)
        lf.label[int(leaves[len(leaves) // 2])] += 2
    # conditioned-walk defining events
    if inst.get("walk") is not None:
        path = inst["walk"].path
        vals = path.values()
        checks["walk_endpoint_ok"] = int(vals[-1]) == -f.rho
        checks["walk_first_passage_ok"] = bool(vals[:-1].min() > -f.rho)
        checks["walk_jump_count_ok"] = int(inst["a_set"].contains(path.jumps).sum()) == n
    # label decomposition identity
    dec = decompose_labels(lf)
    recon = dec["L_tilde"] + dec["b"][1 - dec["Wmin"]]
    roots = f.roots()
    checks["decomposition_ok"] = bool(np.array_equal(recon, lf.label))
    checks["ltilde_roots_ok"] = bool((dec["L_tilde"][roots] == 0).all())
    # bijection + Euler + distances
    property1_ok = True
    try:
        pm = build_map(lf)
        rep_euler = verify_euler(pm, inst["d"])
        checks["euler_ok"] = bool(rep_euler["pass"])
        dstar = bfs_distances(pm.hmap, [pm.star])[0]
        leaves = np.flatnonzero(f.out_degree == 0)
        expect = lf.label[leaves] - lf.label.min() + 1
        property1_ok = bool(np.array_equal(expect, dstar[pm.phi[leaves]]))
        checks["sign_ok"] = pm.sign() == "negative"
        pairs = np.stack(
            [rng.integers(0, f.upsilon, size=200), rng.integers(0, f.upsilon, size=200)],
            axis=1,
        )
        checks["cactus_ok"] = bool(check_cactus(pm, lf, pairs)["pass"])
    except Exception:
        property1_ok = False
    checks["property1_ok"] = property1_ok
    return checks


# -- experiment --------------------------------------------------------------------


def cmd_experiment(cfg: dict, seed: int, outdir: Path, threads: int) -> int:
    jobs = _jobs(cfg, seed)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    traces = []
    for res in _run_jobs(_experiment_one, jobs, cfg, threads):
        rows.extend(res["rows"])
        traces.extend(res["traces"])
    lines = ["schema,seed,n,rho,replica,statistic,value"]
    for n, rho, rep, stat, value in rows:
        lines.append(f"{SCHEMA_VERSION},{seed},{n},{rho},{rep},{stat},{value!r}")
    (outdir / "stats.csv").write_text("\n".join(lines) + "\n")
    if traces:
        tl = ["schema,seed,n,rho,replica,t,value"]
        for n, rho, rep, t, v in traces:
            tl.append(f"{SCHEMA_VERSION},{seed},{n},{rho},{rep},{t!r},{v!r}")
        (outdir / "traces.csv").write_text("\n".join(tl) + "\n")
    summary = _summarise(cfg, rows)
    (outdir / "summary.json").write_text(_dump_json(summary))
    return 0


def _experiment_one(cfg, n, rep, rng):
    stats_wanted = cfg.get("statistics", ["dist_to_star"])
    inst = _instance(cfg, n, rng)
    lf = inst["lf"]
    f = lf.forest
    rho = f.rho
    lab = lf.label
    st = dg.derive_stats(inst["d"])
    rows = []
    traces = []

    def put(stat, value):
        rows.append((n, rho, rep, stat, float(value)))

    if "dist_to_star" in stats_wanted:
        leaves = np.flatnonzero(f.out_degree == 0)
        dstar = lab[leaves] - lab.min() + 1
        put("dist_to_star_mean", dstar.mean())
        put("dist_to_star_max", dstar.max())
    if "label_marginal" in stats_wanted:
        scale = math.sqrt(3.0 / (2.0 * st.sigma)) if st.sigma2 > 0 else 0.0
        for u in rng.integers(0, f.upsilon, size=int(cfg.get("marginals_per_replica", 32))):
            put("label_marginal", scale * lab[int(u)])
    if "ltilde_sup" in stats_wanted:
        dec = decompose_labels(lf)
        put("ltilde_sup", np.abs(dec["L_tilde"]).max() / math.sqrt(2.0 * rho))
        put("b_mid", dec["b"][rho // 2] / math.sqrt(2.0 * rho))
    if "two_point" in stats_wanted:
        pm = reroot_to_uniform(build_map(lf), rng)
        nv = pm.hmap.n_vertices
        others = np.flatnonzero(np.arange(nv) != pm.star)
        xy = rng.choice(others, size=(8, 2))
        d = bfs_distances(pm.hmap, list(map(int, xy[:, 0])))
        for i in range(8):
            put("two_point", d[i, int(xy[i, 1])])
    if "jumps" in stats_wanted:
        js = bz.jump_stats(f.lukasiewicz_path())
        put("delta", js.delta)
        put("delta_prime", js.delta_prime if np.isfinite(js.delta_prime) else -1)
        put("zeta", js.zeta)
        put("sum_kk1", js.sum_kk1)
    if inst.get("walk") is not None:
        put("attempts", inst["walk"].attempts)
    if "label_trace" in stats_wanted:
        ups = f.upsilon
        step = max(1, ups // int(cfg.get("trace_points", 512)))
        for j in range(0, ups, step):
            traces.append((n, rho, rep, j / ups, int(lab[j])))
    return {"rows": rows, "traces": traces}


def _summarise(cfg, rows) -> dict:
    by = {}
    for n, rho, rep, stat, value in rows:
        by.setdefault(stat, {}).setdefault(n, []).append(value)
    summary = {"schema": SCHEMA_VERSION, "medians": {}, "slopes": {}}
    for stat, per_n in by.items():
        summary["medians"][stat] = {str(n): float(np.median(v)) for n, v in sorted(per_n.items())}
        if len(per_n) >= 3 and stat.endswith("_mean"):
            ns = np.array(sorted(per_n))
            med = np.array([np.median(per_n[n]) for n in ns])
            if (med > 0).all():
                slope = np.polyfit(np.log(ns), np.log(med), 1)[0]
                summary["slopes"][stat] = float(slope)
    return summary


# -- plumbing -----------------------------------------------------------------------


def _jobs(cfg: dict, seed: int):
    jobs = []
    ss = np.random.SeedSequence(seed)
    sizes = cfg.get("sizes", [100])
    reps = int(cfg.get("replicas", 1))
    children = ss.spawn(len(sizes) * reps)
    i = 0
    for n in sizes:
        for rep in range(reps):
            jobs.append((int(n), rep, np.random.default_rng(children[i])))
            i += 1
    return jobs


def _worker(args):
    fn, cfg, n, rep, rng = args
    return fn(cfg, n, rep, rng)


def _run_jobs(fn, jobs, cfg, threads: int):
    if threads <= 1:
        for n, rep, rng in jobs:
            yield fn(cfg, n, rep, rng)
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(_worker, [(fn, cfg, n, rep, rng) for n, rep, rng in jobs])


def _dump_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=1, default=str) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="planarmaps", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("sample", "verify", "experiment"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", required=True)
        p.add_argument(
            "--threads", type=int, default=int(os.environ.get(ENV_THREADS, "1"))
        )
        if name == "verify":
            p.add_argument("--inject", choices=["label-corruption"], default=None)
    args = ap.parse_args(argv)
    cfg = load_config(args.config)
    outdir = Path(args.out)
    if args.command == "sample":
        return cmd_sample(cfg, args.seed, outdir, args.threads)
    if args.command == "verify":
        return cmd_verify(cfg, args.seed, outdir, args.threads, inject=args.inject)
    return cmd_experiment(cfg, args.seed, outdir, args.threads)


if __name__ == "__main__":
    raise SystemExit(main())
