"""Command-line front end; every subcommand prints one JSON document.

Exit codes: 0 for an LE/pass verdict, 1 for GT/fail, 2 when undecided at the
precision cap, 3 for usage errors and exceeded caps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import approx, gaps, metric
from .caps import ENUM_CAP, SEQ_CAP, CapExceeded
from .certreal import DEFAULT_PREC, PREC_CAP, BoundVerdict, CertReal, CertRealError, Undecided, compare
from .exact import TooLarge
from .schedules import parse_phi, parse_rho

SCHEMA_VERSION = "1"
EXIT = {"LE": 0, "pass": 0, "GT": 1, "fail": 1, "UNDECIDED": 2}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2, which means UNDECIDED here
        raise UsageError(message)


# JSON helpers -----------------------------------------------------------------------------
def cr(x: CertReal | None) -> dict | None:
    if x is None:
        return None
    return {"lo": x.lo_str(), "hi": x.hi_str(), "mid": x.mid_str()}


def q(x: Fraction | int | None) -> str | None:
    return None if x is None else str(x)


def _verdict(v: BoundVerdict) -> str:
    return v.value


# subcommands ------------------------------------------------------------------------------
def cmd_approx(a, cfg) -> tuple[dict, str, dict]:
    c = approx.approx_sum_roots(a.k, a.d, a.alpha, a.n, cfg.precision, cfg.precision_cap, cfg.enum_cap)
    out = {
        "b": list(c.b),
        "dist": cr(c.dist),
        "exponent": q(c.exponent),
        "constant": q(c.constant),
        "bound": cr(c.bound),
        "path": c.path,
        "notes": list(c.notes),
    }
    return out, _verdict(c.verdict), {"oracle": c.path != "construction"}


def cmd_approx_single(a, cfg):
    r = approx.approx_single(a.theta, a.alpha, a.n, cfg.precision, cfg.precision_cap)
    return {"a": r.a, "dist": cr(r.dist), "bound": cr(r.bound)}, _verdict(r.verdict), {}


def cmd_gap(a, cfg):
    w = gaps.gap_element(a.theta, a.x, cfg.precision)
    bound = gaps.gap_bound(a.theta, a.x, cfg.precision)
    out = {
        "u": w.u,
        "v": w.v,
        "value": cr(w.value),
        "slack": cr(w.slack),
        "bound": cr(bound),
        "psi": q(w.psi),
        "regime": w.regime.value,
        "path": w.path,
    }
    if w.internals is not None:
        it = w.internals
        out["internals"] = {"s": it.s, "E": cr(it.E), "k": cr(it.k), "l": it.l}
    return out, _verdict(compare(w.slack, bound)), {"oracle": w.path == "oracle"}


def cmd_two_powers(a, cfg):
    r = gaps.approx_two_powers(a.theta, a.alpha, a.n, cfg.precision)
    out = {"u": r.u, "v": r.v, "dist": cr(r.dist), "constant": q(r.constant), "bound": cr(r.bound),
           "path": r.path, "lifted": q(r.lifted)}
    return out, _verdict(r.verdict), {"oracle": r.path == "oracle"}


def _record(rec: metric.SolutionRecord) -> dict:
    return {"omega": list(rec.omega), "b": str(rec.b), "m": rec.m, "residual": cr(rec.residual),
            "threshold": cr(rec.threshold), "exact": rec.exact}


def cmd_count(a, cfg):
    rho = parse_rho(a.rho)
    res = metric.count_solutions(a.theta, a.k, rho, a.M, cfg.precision, cfg.precision_cap, cfg.enum_cap, cfg.threads)
    page = res.records[a.offset:] if a.limit is None else res.records[a.offset : a.offset + a.limit]
    out = {
        "total": len(res.records),
        "exact": res.exact_count,
        "screened": res.screened,
        "offset": a.offset,
        "limit": a.limit,
        "records": [_record(r) for r in page],
        "undecided": [{"omega": list(u.omega), "m": u.m, "residual": cr(u.residual), "threshold": cr(u.threshold)}
                      for u in res.undecided],
    }
    return out, "UNDECIDED" if res.undecided else "pass", {}


def cmd_measure(a, cfg):
    r = metric.sample_Vm_measure(a.k, parse_rho(a.rho), a.m, a.lo, a.hi, a.grid, cfg.enum_cap, cfg.threads)
    out = {"hits": r.hits, "fraction": repr(r.fraction), "measure": repr(r.measure),
           "threshold": repr(r.threshold), "envelope": repr(r.envelope)}
    return out, "pass", {"float_screen": True}


def cmd_make_theta(a, cfg):
    t = metric.construct_theta(parse_phi(a.phi), a.r, a.s, a.depth, cfg.precision, cfg.precision_cap, cfg.seq_cap)
    out = {
        "seq": [metric._term_json(x) for x in t.seq],
        "theta": cr(t.theta),
        "theta_bounds": None if t.theta_bounds is None else [q(t.theta_bounds[0]), q(t.theta_bounds[1])],
        "certified_levels": [st.h for st in t.steps],
        "theta_seq": metric.theta_seq_to_json(t),
    }
    return out, "pass", {"scaled": any(isinstance(x, metric.ScaledInt) for x in t.seq)}


def cmd_verify_theta(a, cfg):
    with open(a.file, encoding="utf-8") as fh:
        data = json.load(fh)
    if "outputs" in data:
        data = data["outputs"]["theta_seq"]
    t = metric.theta_seq_from_json(data, cfg.precision)
    w = metric.verify_witness(t, a.h, cfg.precision, cfg.precision_cap)
    out = {"h": w.h, "N": str(w.N), "U": str(w.U), "log2_dist": cr(w.log2_dist), "dist": cr(w.dist),
           "log2_phi": cr(w.log2_phi), "positive": w.positive}
    v = {"LE": "pass", "GT": "fail"}.get(w.verdict.value, "UNDECIDED")
    return out, v, {}


def cmd_oracle_sum(a, cfg):
    r = approx.oracle_min_sum(a.k, a.d, a.alpha, a.n, a.exclude_exact, cfg.enum_cap, cfg.precision, cfg.precision_cap)
    return {"b": list(r.b), "dist": cr(r.dist)}, "pass", {}


def cmd_oracle_gap(a, cfg):
    u, v, val = gaps.oracle_next_element(a.theta, a.x, a.cap, cfg.precision, cfg.enum_cap)
    gap = val - CertReal.exact(gaps.as_fraction(a.x), cfg.precision)
    return {"u": u, "v": v, "value": cr(val), "gap": cr(gap)}, "pass", {}


def cmd_calibrate_approx(a, cfg):
    C = approx.calibrated_constant(a.k, a.d)
    return {"constant": q(C), "exponent": q(-approx.gamma(a.k, a.d)), "n": approx.CALIBRATION_N,
            "alphas": list(approx.CALIBRATION_ALPHAS)}, "pass", {}


def cmd_calibrate_gap(a, cfg):
    th = gaps.as_fraction(a.theta)
    if gaps.regime(th) is gaps.Regime.GE2:
        return {"constant": None, "explicit": True, "psi": q(gaps.psi(th))}, "pass", {}
    return {"constant": q(gaps.calibrated_gap_constant(th)), "explicit": False, "psi": q(gaps.psi(th))}, "pass", {}


def cmd_sweep_gamma(a, cfg):
    rows = []
    for d in range(2, a.dmax + 1):
        for k in range(1, a.kmax + 1):
            rows.append({"k": k, "d": d, "xi": approx.xi_for(k, d), "gamma": q(approx.gamma(k, d)),
                         "gamma_lower": q(approx.gamma_lower(k, d)), "gamma_star": q(approx.gamma_star(k, d))})
    return {"rows": rows}, "pass", {}


def cmd_sweep_psi(a, cfg):
    lo, hi = gaps.as_fraction(a.lo), gaps.as_fraction(a.hi)
    if a.steps < 1 or hi < lo or lo <= 0:
        raise ValueError("need 0 < lo <= hi and steps >= 1")
    rows = []
    for i in range(a.steps + 1):
        th = lo + (hi - lo) * Fraction(i, a.steps)
        rows.append({"theta": q(th), "regime": gaps.regime(th).value, "psi": q(gaps.psi(th))})
    return {"rows": rows}, "pass", {}


# parser -----------------------------------------------------------------------------------
def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--precision", type=int, default=None, help="starting precision in bits")
    g.add_argument("--precision-cap", type=int, default=PREC_CAP)
    g.add_argument("--enum-cap", type=int, default=ENUM_CAP)
    g.add_argument("--seq-cap", type=int, default=SEQ_CAP)
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--output", default="-", help="file path, or - for stdout")
    g.add_argument("--format", choices=("json", "tsv"), default="json")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="theta-powers", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(container, name: str, fn: Callable, args: Sequence[tuple], help: str):
        sp = container.add_parser(name, parents=[common], help=help)
        for spec in args:
            sp.add_argument(*spec[0], **spec[1])
        sp.set_defaults(fn=fn)
        return sp

    def arg(name, **kw):
        return ((name,), kw)

    add(sub, "approx", cmd_approx, [arg("k", type=int), arg("d", type=int), arg("alpha"), arg("n", type=int)],
        "sum of k d-th roots close to alpha mod 1")
    add(sub, "approx-single", cmd_approx_single, [arg("theta"), arg("alpha"), arg("n", type=int)],
        "single power a**theta close to alpha mod 1")
    add(sub, "gap", cmd_gap, [arg("theta"), arg("x")], "element of the two-power sum set just above x")
    add(sub, "two-powers", cmd_two_powers, [arg("theta"), arg("alpha"), arg("n", type=int)],
        "u**theta + v**theta close to alpha mod 1")
    cnt = add(sub, "count", cmd_count, [arg("theta"), arg("k", type=int), arg("rho"), arg("M", type=int)],
              "certified solution counting")
    cnt.add_argument("--limit", type=int, default=None)
    cnt.add_argument("--offset", type=int, default=0)
    add(sub, "measure", cmd_measure,
        [arg("k", type=int), arg("rho"), arg("m", type=int), arg("lo"), arg("hi"), arg("grid", type=int)],
        "grid estimate of the exceptional set at height m")
    add(sub, "make-theta", cmd_make_theta, [arg("phi"), arg("r", type=int), arg("s", type=int), arg("depth", type=int)],
        "build an exceptional exponent")
    add(sub, "verify-theta", cmd_verify_theta, [arg("file"), arg("h", type=int)], "check one witness level")

    orc = sub.add_parser("oracle", help="exhaustive reference searches").add_subparsers(
        dest="which", required=True, parser_class=_Parser)
    osum = add(orc, "sum", cmd_oracle_sum, [arg("k", type=int), arg("d", type=int), arg("alpha"), arg("n", type=int)],
               "exhaustive best sum of roots")
    osum.add_argument("--exclude-exact", action="store_true")
    ogap = add(orc, "gap", cmd_oracle_gap, [arg("theta"), arg("x")], "least sum-set element at or above x")
    ogap.add_argument("--cap", type=int, default=None)

    cal = sub.add_parser("calibrate", help="calibrated constants").add_subparsers(
        dest="which", required=True, parser_class=_Parser)
    add(cal, "approx", cmd_calibrate_approx, [arg("k", type=int), arg("d", type=int)], "constant for approx")
    add(cal, "gap", cmd_calibrate_gap, [arg("theta")], "constant for gap")

    sw = sub.add_parser("sweep", help="exponent tables").add_subparsers(dest="which", required=True, parser_class=_Parser)
    add(sw, "gamma", cmd_sweep_gamma, [arg("kmax", type=int), arg("dmax", type=int)], "approximation exponents")
    add(sw, "psi", cmd_sweep_psi, [arg("lo"), arg("hi"), arg("steps", type=int)], "gap exponents")
    return parser


# driver -----------------------------------------------------------------------------------
def _config(a) -> argparse.Namespace:
    if a.precision is None:
        env = os.environ.get("THETA_POWERS_PRECISION")
        a.precision = int(env) if env else DEFAULT_PREC
    if a.precision < 32 or a.precision > a.precision_cap:
        raise UsageError("need 32 <= precision <= precision cap")
    for name in ("enum_cap", "seq_cap", "threads"):
        if getattr(a, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    return a


def _inputs(a) -> dict:
    skip = {"fn", "precision", "precision_cap", "enum_cap", "seq_cap", "threads", "output", "format"}
    return {k: v for k, v in vars(a).items() if k not in skip}


def _tsv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    rows = doc.get("outputs", {}).get("rows")
    if rows:
        w.writerow(rows[0].keys())
        for r in rows:
            w.writerow(r.values())
        return buf.getvalue()
    flat: list[tuple[str, Any]] = []

    def walk(prefix: str, v: Any):
        if isinstance(v, dict):
            for k, x in v.items():
                walk(f"{prefix}.{k}" if prefix else k, x)
        elif isinstance(v, list):
            flat.append((prefix, json.dumps(v)))
        else:
            flat.append((prefix, v))

    walk("", {k: v for k, v in doc.items()})
    for k, v in flat:
        w.writerow((k, "" if v is None else v))
    return buf.getvalue()


def _emit(doc: dict, fmt: str, dest: str) -> None:
    text = json.dumps(doc, indent=2) + "\n" if fmt == "json" else _tsv(doc)
    if dest == "-":
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)


def _error(argv: list[str], kind: str, message: str) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "argv": argv, "error": kind, "message": message}
    sys.stderr.write(json.dumps(doc) + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        a = build_parser().parse_args(argv)
        cfg = _config(a)
    except UsageError as e:
        _error(argv, "usage", str(e))
        return 3
    except SystemExit as e:  # --help
        return int(e.code or 0)
    t0 = time.perf_counter()
    try:
        outputs, verdict, fallback = a.fn(a, cfg)
    except Undecided as e:
        _error(argv, "undecided", str(e))
        return 2
    except (CapExceeded, TooLarge) as e:
        _error(argv, "cap", str(e))
        return 3
    except (ValueError, CertRealError, OSError, KeyError) as e:
        _error(argv, "usage", str(e))
        return 3
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": a.command if not hasattr(a, "which") else f"{a.command} {a.which}",
        "argv": argv,
        "inputs": _inputs(a),
        "outputs": outputs,
        "verdict": verdict,
        "precision": cfg.precision,
        "precision_cap": cfg.precision_cap,
        "fallback": fallback,
        "wall_time_s": f"{time.perf_counter() - t0:.6f}",
    }
    try:
        _emit(doc, cfg.format, cfg.output)
    except OSError as e:
        _error(argv, "usage", str(e))
        return 3
    return EXIT[verdict]


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
