"""Configuration-driven scenario runner.

Subcommands: run, green, npoint, ferm, symbol, axioms, export, list-checks.
Reports are JSON with a deterministic `body` (same seed implies byte-identical
bodies) and a `meta` section carrying timestamps and runtimes.  Exit codes:
0 all checks pass, 1 check failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import checks as checks_mod
from .checks import CheckResult, checks_for_suites, list_checks
from .green import GreenPair, dirac_green, proca_green
from .lattice import LatticeSpacetime
from .ops import (LatticeOperator, Section, build_dalembert, build_dirac_1p1,
                  build_proca)

SUITES = ("green", "exact-seq", "symbols", "bos", "ferm", "axioms", "all")


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: line {exc.lineno}, col {exc.colno}: "
                          f"{exc.msg}")
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    lat = cfg.get("lattice", {})
    for key in lat:
        if key not in ("n_t", "n_x", "dt", "dx"):
            raise ConfigError(f"unknown lattice key {key!r}")
    suites = cfg.get("suites", ["all"])
    for s in suites:
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r}; choose from {SUITES}")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    op = cfg.get("operator")
    if op is not None and op not in ("wave", "dirac", "proca", "wave+dirac"):
        raise ConfigError(f"unknown operator {op!r}")


def build_operator(cfg: dict):
    lat = checks_mod._lat(cfg)
    name = cfg.get("operator", "wave")
    m0 = float(cfg.get("mass", 1.0))
    if name == "wave":
        op = build_dalembert(lat, m0)
        return op, GreenPair(op)
    if name == "dirac":
        op = build_dirac_1p1(lat, m0)
        return op, GreenPair(op)
    if name == "proca":
        p, pt, forms = build_proca(lat, m0)
        return p, proca_green(GreenPair(pt), forms, m0, p)
    raise ConfigError(f"operator {name!r} not constructible here")


# -- run ----------------------------------------------------------------------------


def run_suites(cfg: dict) -> dict:
    seed = int(cfg.get("seed", 0))
    suites = cfg.get("suites", ["all"])
    selected = checks_for_suites(suites)
    workers = int(os.environ.get("GHQ_THREADS", "1") or "1")

    def run_one(check):
        start = time.perf_counter()
        try:
            result = check.run(cfg, seed)
        except Exception as exc:  # a crashed check is a failed check
            result = CheckResult(float("inf"), 0.0, {"error": repr(exc)})
        elapsed = time.perf_counter() - start
        return check, result, elapsed

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, selected))
    else:
        outcomes = [run_one(c) for c in selected]

    records = []
    runtimes = {}
    n_pass = 0
    for check, result, elapsed in outcomes:
        status = "pass" if result.passed else "fail"
        n_pass += status == "pass"
        records.append({
            "name": check.name,
            "anchor": check.anchor,
            "suite": check.suite,
            "status": status,
            "observed": _jsonable(result.observed),
            "tolerance": result.tolerance,
            "details": _jsonable(result.details),
        })
        runtimes[check.name] = round(elapsed, 4)
    body = {
        "config": cfg,
        "seed": seed,
        "checks": records,
        "summary": {"total": len(records), "passed": n_pass,
                    "failed": len(records) - n_pass},
    }
    return {
        "body": body,
        "meta": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                 "runtimes": runtimes},
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def serialize_body(body: dict) -> str:
    return json.dumps(body, indent=2, sort_keys=True)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    report = run_suites(cfg)
    out_path = args.output or cfg.get("output", "report.json")
    with open(out_path, "w") as fh:
        fh.write(json.dumps({"meta": report["meta"],
                             "body": json.loads(serialize_body(report["body"]))},
                            indent=2, sort_keys=True))
    failed = report["body"]["summary"]["failed"]
    for rec in report["body"]["checks"]:
        print(f"[{rec['status'].upper():4s}] {rec['name']:34s} {rec['anchor']}")
    print(f"-- {report['body']['summary']['passed']}/"
          f"{report['body']['summary']['total']} checks passed; "
          f"report: {out_path}")
    return 1 if failed else 0


# -- section / matrix i/o --------------------------------------------------------------


def write_section_csv(path: str, phi: Section) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,c,re,im\n")
        v = phi.values
        for t in range(v.shape[0]):
            for x in range(v.shape[1]):
                for c in range(v.shape[2]):
                    z = complex(v[t, x, c])
                    if z != 0:
                        fh.write(f"{t},{x},{c},{z.real!r},{z.imag!r}\n")


def read_section_csv(path: str, lat: LatticeSpacetime, k: int, kind: str) -> Section:
    vals = np.zeros((lat.n_t, lat.n_x, k),
                    dtype=complex if kind == "complex" else float)
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "t,x,c,re,im":
            raise ConfigError(f"bad section header in {path}")
        for line in fh:
            t, x, c, re, im = line.strip().split(",")
            z = float(re) + 1j * float(im)
            vals[int(t), int(x), int(c)] = z if kind == "complex" else float(re)
    return Section(lat, vals, kind)


def write_operator_triplets(prefix: str, op: LatticeOperator) -> None:
    mat = op.matrix(padded=False).tocoo()
    order = np.lexsort((mat.col, mat.row))
    with open(prefix + ".triplets.txt", "w") as fh:
        for i in order:
            v = mat.data[i]
            if op.kind == "complex":
                fh.write(f"{mat.row[i]} {mat.col[i]} {v.real!r} {v.imag!r}\n")
            else:
                fh.write(f"{mat.row[i]} {mat.col[i]} {float(v)!r}\n")
    header = {
        "lattice": {"n_t": op.lattice.n_t, "n_x": op.lattice.n_x,
                    "dt": op.lattice.dt, "dx": op.lattice.dx},
        "k": op.k, "r": op.r, "kind": op.kind, "name": op.name,
        "pairing": _jsonable(op.pairing.matrix),
        "sesquilinear": op.pairing.sesquilinear,
    }
    with open(prefix + ".header.json", "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)


def read_operator_triplets(prefix: str):
    with open(prefix + ".header.json") as fh:
        header = json.load(fh)
    import scipy.sparse as sp
    rows, cols, vals = [], [], []
    with open(prefix + ".triplets.txt") as fh:
        for line in fh:
            parts = line.split()
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            if header["kind"] == "complex":
                vals.append(float(parts[2]) + 1j * float(parts[3]))
            else:
                vals.append(float(parts[2]))
    lat = header["lattice"]
    n = lat["n_t"] * lat["n_x"] * header["k"]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n)), header


def cmd_green(args) -> int:
    cfg = load_config(args.config)
    op, gp = build_operator(cfg)
    lat = op.lattice
    f = read_section_csv(args.source, lat, op.k, op.kind)
    which = {"retarded": gp.retarded, "advanced": gp.advanced,
             "propagator": gp.propagator}[args.kind]
    psi = which(f)
    write_section_csv(args.output, psi)
    print(f"wrote {args.kind} solution to {args.output}")
    return 0


def cmd_npoint(args) -> int:
    cfg = load_config(args.config)
    seed = int(cfg.get("seed", 0))
    res = checks_mod.check_npoint_ccr(cfg, seed)
    res2 = checks_mod.check_npoint_oracle(cfg, seed)
    out = {"ccr_defect": _jsonable(res.observed),
           "oracle_defect": _jsonable(res2.observed),
           "tolerances": [res.tolerance, res2.tolerance]}
    print(json.dumps(out, indent=2))
    ok = res.passed and res2.passed
    return 0 if ok else 1


def cmd_ferm(args) -> int:
    cfg = load_config(args.config)
    seed = int(cfg.get("seed", 0))
    from .quant_ferm import FermionicFields
    lat = checks_mod._lat(cfg, default=(24, 4, 0.1, 0.25))
    op = build_dirac_1p1(LatticeSpacetime(lat.n_t, min(lat.n_x, 6), lat.dt, lat.dx),
                         float(cfg.get("mass", 1.0)))
    ff = FermionicFields(GreenPair(op))
    res = checks_mod.check_ferm_fields(cfg, seed)
    out = {
        "gram": _jsonable(ff.sol.gram),
        "gram_eigenvalues": _jsonable(ff.sol.eigenvalues),
        "anticommutator_defect": _jsonable(res.observed),
        "tolerance": res.tolerance,
    }
    text = json.dumps(out, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0 if res.passed else 1


def cmd_symbol(args) -> int:
    from .symbols import (Covector, build_clifford, build_rs, definite_type_test,
                          euler_fiber_pairing, is_invertible, min_singular_value,
                          sigma_dirac, sigma_euler, sigma_rs, sigma_wave)
    try:
        req = json.loads(args.json)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad symbol request: {exc.msg}")
    name = req.get("operator")
    m = int(req.get("m", 2))
    xi = Covector(np.asarray(req.get("xi", [1.0] + [0.0] * (m - 1)), dtype=float))
    if name == "wave":
        sig = sigma_wave(xi, 1)
        pairing = np.eye(1)
    elif name == "dirac":
        model = build_clifford(m)
        sig = sigma_dirac(model, xi)
        pairing = model.pairing
    elif name == "euler":
        sig = sigma_euler(m, xi)
        pairing = euler_fiber_pairing(m)
    elif name == "rs":
        rs = build_rs(m)
        sig = sigma_rs(rs, xi)
        pairing = rs.pairing32
    else:
        raise ConfigError(f"unknown symbol operator {name!r}")
    smin, smax = min_singular_value(sig)
    if name == "wave":
        def_rep = None
    elif name == "dirac":
        model = build_clifford(m)
        def_rep = definite_type_test(lambda x: sigma_dirac(model, x), pairing, m)
    elif name == "euler":
        def_rep = definite_type_test(lambda x: sigma_euler(m, x), pairing, m)
    else:
        def_rep = definite_type_test(lambda x: sigma_rs(rs, x), pairing, m)
    out = {
        "classification": xi.classification,
        "min_singular_value": smin,
        "invertible": is_invertible(sig),
        "definite_type": None if def_rep is None else def_rep.definite,
    }
    if def_rep is not None and def_rep.witness is not None:
        out["witness"] = _jsonable(def_rep.witness)
    print(json.dumps(out, indent=2))
    return 0


def cmd_axioms(args) -> int:
    cfg = load_config(args.config)
    cfg["suites"] = ["axioms"]
    report = run_suites(cfg)
    print(serialize_body(report["body"]))
    return 1 if report["body"]["summary"]["failed"] else 0


def cmd_export(args) -> int:
    cfg = load_config(args.config)
    op, gp = build_operator(cfg)
    if args.kind == "op":
        write_operator_triplets(args.output, op)
        print(f"wrote {args.output}.triplets.txt and {args.output}.header.json")
        return 0
    if args.kind == "section":
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        from .ops import random_margin_section
        write_section_csv(args.output, random_margin_section(op, rng))
        print(f"wrote {args.output}")
        return 0
    if args.kind == "green":
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        from .ops import random_margin_section
        f = random_margin_section(op, rng)
        write_section_csv(args.output, gp.retarded(f))
        print(f"wrote {args.output}")
        return 0
    if args.kind == "gram":
        from .quant_ferm import SolutionSpace
        sol = SolutionSpace.physical(gp)
        with open(args.output, "w") as fh:
            json.dump({"gram": _jsonable(sol.gram),
                       "eigenvalues": _jsonable(sol.eigenvalues)}, fh,
                      indent=2, sort_keys=True)
        print(f"wrote {args.output}")
        return 0
    raise ConfigError(f"unknown export kind {args.kind!r}")


def cmd_list_checks(args) -> int:
    rows = list_checks()
    width = max(len(n) for n, _, _ in rows)
    for name, anchor, suite in rows:
        print(f"{name:{width}s}  [{suite:9s}]  {anchor}")
    print(f"-- {len(rows)} checks")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ghqlab",
        description="lattice verification laboratory for Green-hyperbolic "
                    "operators and CCR/CAR quantization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run check suites from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--output", default=None)

    p_green = sub.add_parser("green", help="solve a causal problem for a source")
    p_green.add_argument("config")
    p_green.add_argument("source", help="section CSV (t,x,c,re,im)")
    p_green.add_argument("output")
    p_green.add_argument("--kind", choices=("retarded", "advanced", "propagator"),
                         default="retarded")

    p_np = sub.add_parser("npoint", help="bosonic n-point identity summary")
    p_np.add_argument("config")

    p_f = sub.add_parser("ferm", help="fermionic Gram and anti-commutator summary")
    p_f.add_argument("config")
    p_f.add_argument("--output", default=None)

    p_s = sub.add_parser("symbol", help="pointwise symbol query (JSON request)")
    p_s.add_argument("json")

    p_a = sub.add_parser("axioms", help="run the locally-covariant axiom suite")
    p_a.add_argument("config")

    p_e = sub.add_parser("export", help="export operators/sections/grams")
    p_e.add_argument("config")
    p_e.add_argument("kind", choices=("op", "green", "section", "gram"))
    p_e.add_argument("output")

    sub.add_parser("list-checks", help="table of every check with its anchor")

    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run, "green": cmd_green, "npoint": cmd_npoint,
        "ferm": cmd_ferm, "symbol": cmd_symbol, "axioms": cmd_axioms,
        "export": cmd_export, "list-checks": cmd_list_checks,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
