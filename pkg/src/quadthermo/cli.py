"""Command-line entry point: ``quadthermo <subcommand> [options]``.

Exit status is 0 when every check passed, 2 when a check failed and 1 on an
operational error.  Reports are deterministic: reals are written as decimal
strings, keys are sorted, and parallel work is gathered in input order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import product

import mpmath

from . import __version__
from .dynamics import ASSUMPTION_GAMMA, QuadMap, chi_crit, theta_and_tstar
from .errors import QuadThermoError
from .logvalue import ctx as lctx

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2

BASE_ASSUMPTIONS = [ASSUMPTION_GAMMA]


class CheckFailed(Exception):
    """Raised after the report is written when a check did not pass."""


def _pmap(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _dec(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, Fraction):
        return str(x)
    return mpmath.nstr(x, 30)


def _envelope(args, kind: str, result, assumptions=()) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "config", "threads")}
    return {"tool": "quadthermo", "version": __version__, "kind": kind, "config": config,
            "assumptions": BASE_ASSUMPTIONS + list(assumptions), "result": result}


def _emit_json(args, doc: dict) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    _write(args, text)


def _emit_csv(args, header: dict, columns: list[str], rows: list[dict]) -> None:
    buf = io.StringIO()
    meta = json.dumps(header, sort_keys=True)
    buf.write(f"# {meta}\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in columns})
    _write(args, buf.getvalue())


def _write(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _scheme(args):
    from .partition import PartitionScheme
    if getattr(args, "toy", False):
        return PartitionScheme.toy()
    return PartitionScheme.build(Fraction(args.xi), args.q, strict=not args.relaxed)


# ------------------------------------------------------------------ commands

def _verify_one(job):
    xi, q, tau_points, omegas, relaxed, strict_domain = job
    from .partition import PartitionScheme, default_tau_grid, verify_appendix
    scheme = PartitionScheme.build(Fraction(xi), q, strict=not relaxed)
    rep = verify_appendix(scheme, default_tau_grid(scheme, tau_points),
                          omega_grid=[Fraction(o) for o in omegas], strict_domain=strict_domain)
    d = rep.as_dict()
    m = rep.min_margin()
    d["min_margin_log2"] = "inf" if m == lctx.inf else lctx.nstr(m, 25)
    d["flags"] = scheme.flags()
    return d


def cmd_verify_appendix(args) -> None:
    xis = args.xi or ["1"]
    qs = args.q or [400]
    if len(xis) != len(qs):
        raise ValueError("give --xi and --q the same number of times (one scheme per pair)")
    jobs = [(x, q, args.tau_points, args.omega, args.relaxed, args.strict_domain) for x, q in zip(xis, qs)]
    reports = _pmap(_verify_one, jobs, args.threads)
    _emit_json(args, _envelope(args, "verify-appendix", {"reports": reports}))
    if not all(r["all_pass"] for r in reports):
        raise CheckFailed("an inequality has a negative margin")


def cmd_series(args) -> None:
    from .partition import pi_total, series_rows
    scheme = _scheme(args)
    tau, lam = Fraction(args.tau), Fraction(args.lam)
    rows = series_rows(scheme, args.sign, tau, lam, args.smax)
    total = pi_total(scheme, args.sign, tau, lam, s_max=args.smax)
    rows.append({"s": "total", "kind": "Pi", "sign": args.sign,
                 "log2_value": total.value.log2_str(30), "log2_tail": total.tail_bound.log2_str(30)})
    header = _envelope(args, "series", None, scheme.flags())
    header.pop("result")
    _emit_csv(args, header, ["s", "kind", "sign", "log2_value", "log2_tail"], rows)


def cmd_schedule(args) -> None:
    from .schedule import build_schedule
    scheme = _scheme(args)
    sched = build_schedule(scheme, Fraction(args.omega), args.m_max, adjust_parity=args.adjust_parity)
    _emit_json(args, _envelope(args, "schedule", sched.as_dict(), scheme.flags()))


def cmd_itinerary(args) -> None:
    from .schedule import bit_itinerary, build_schedule, check_compatible, hat_itinerary
    scheme = _scheme(args)
    sched = build_schedule(scheme, Fraction(args.omega), args.m_max, adjust_parity=args.adjust_parity)
    hat = hat_itinerary(sched, args.signs, args.length)
    bits = bit_itinerary(hat)
    ok, bad = check_compatible(bits, hat)
    rows = [{"j": j, "hat": hat[j].value, "bit": bits[j]} for j in range(args.length)]
    header = _envelope(args, "itinerary", None, scheme.flags())
    header.pop("result")
    header["compatible"] = ok
    _emit_csv(args, header, ["j", "hat", "bit"], rows)
    if not ok:
        raise CheckFailed(f"bit itinerary incompatible at j={bad}")


def _find_one(job):
    from .search import KneadingTarget, find_parameter, itinerary_of_parameter
    n, prefix, depth, bits = job
    target = KneadingTarget(n, prefix, depth)
    res = find_parameter(target, precision_bits=bits)
    back = itinerary_of_parameter(res.midpoint(), n, len(prefix), bits=bits)
    d = res.as_dict()
    d["round_trip"] = "".join(map(str, back))
    d["round_trip_ok"] = d["round_trip"] == prefix
    return d


def cmd_find_param(args) -> None:
    prefixes = list(args.prefix or [])
    if args.all_length:
        prefixes += ["".join(p) for p in product("01", repeat=args.all_length)]
    if not prefixes:
        raise ValueError("give --prefix or --all-length")
    bits = args.bits or 512
    results = _pmap(_find_one, [(args.n, p, args.depth, bits) for p in prefixes], args.threads)
    ivs = sorted((Fraction(r["c_lo"]), Fraction(r["c_hi"]), r["prefix"]) for r in results)
    disjoint = all(a[1] < b[0] for a, b in zip(ivs, ivs[1:]))
    ok = disjoint and all(r["round_trip_ok"] for r in results)
    _emit_json(args, _envelope(args, "find-param", {"results": results, "pairwise_disjoint": disjoint,
                                                    "all_ok": ok}))
    if not ok:
        raise CheckFailed("round trip or disjointness failed")


def _env_params(args):
    from .pressure import EnvelopeParams
    if args.env_q is None:
        return None
    return EnvelopeParams(args.env_q, Fraction(args.env_xi), args.env_Xi, Fraction(args.env_delta),
                          Fraction(args.env_omega), Fraction(args.env_tstar), Fraction(args.env_chi))


def cmd_pressure(args) -> None:
    from .pressure import (InducingBudget, bowen_pressure, build_induced_system, periodic_points,
                           pressure_envelope)
    fmap = QuadMap(args.c, args.bits or 256)
    steps = max(args.steps, 1)
    ts = [Fraction(args.t_min) + (Fraction(args.t_max) - Fraction(args.t_min)) * k / max(steps - 1, 1)
          for k in range(steps)]
    per = periodic_points(fmap, args.N) if args.method in ("periodic", "both") else None
    system = None
    if args.method in ("bowen", "both"):
        system = build_induced_system(fmap, args.n, InducingBudget(max_return=args.max_return))
    env = _env_params(args)
    rows, flags = [], []
    for t in ts:
        row = {"t": str(t)}
        if per is not None:
            row["p_periodic"] = repr(per.pressure(float(t)))
        if system is not None:
            b = bowen_pressure(system, float(t), ell=args.ell, include_tail=not args.no_tail)
            row["p_bowen"] = repr(b.p)
            row["defect_log2"] = "" if b.defect_log2 is None else repr(b.defect_log2)
            row["warnings"] = "; ".join(b.warnings)
            flags = list(b.flags)
        if env is not None and t > env.t0:
            e = pressure_envelope(env, t)
            row["p_minus_env"] = _dec(e.P_minus)
            row["p_plus_env"] = _dec(e.P_plus)
        rows.append(row)
    header = _envelope(args, "pressure", None, flags)
    header.pop("result")
    _emit_csv(args, header, ["t", "p_periodic", "p_bowen", "p_minus_env", "p_plus_env", "defect_log2",
                             "warnings"], rows)


def _binned_atoms(spread, width: float) -> list[dict]:
    import numpy as np
    if spread.x.size == 0:
        return []
    key = np.floor(spread.x / width).astype(np.int64)
    uniq, inv = np.unique(key, return_inverse=True)
    mass = np.zeros(uniq.size)
    np.add.at(mass, inv, spread.mass)
    return [{"x": repr(float((k + 0.5) * width)), "mass": repr(float(m))} for k, m in zip(uniq, mass)]


def cmd_measure(args) -> None:
    from .measure import gibbs_weights, mass_near_orbits, orbit_sets, spread_measure
    from .pressure import InducingBudget, bowen_pressure, build_induced_system
    fmap = QuadMap(args.c, args.bits or 512)
    budget = InducingBudget(max_return=args.max_return, central_samples=args.central_samples,
                            central_max_shadow=args.max_shadow)
    system = build_induced_system(fmap, args.n, budget)
    p = float(Fraction(args.p)) if args.p is not None else bowen_pressure(system, args.t, ell=1,
                                                                           include_tail=False).p
    g = gibbs_weights(system, args.t, p)
    sp = spread_measure(fmap, system, g)
    plus, minus = orbit_sets(fmap)
    rep = mass_near_orbits(sp, plus, minus, args.radius)
    diag = {k: (repr(v) if isinstance(v, float) else v) for k, v in sp.diagnostics.items()}
    diag["p"] = repr(p)
    diag["sandwich_ok"] = g.sandwich_ok()
    diag["effective_branches"] = repr(g.diagnostics["effective_branches"])
    diag["branches"] = system.size
    doc = {"atoms": _binned_atoms(sp, args.bin_width), "report": rep.as_dict(), "diagnostics": diag}
    _emit_json(args, _envelope(args, "measure", doc, list(system.flags) + [g.diagnostics["note"]]))


def _oscillation_one(job):
    from .measure import gibbs_weights, mass_near_orbits, orbit_sets, spread_measure
    from .pressure import InducingBudget, bowen_pressure, build_induced_system
    from .search import KneadingTarget, find_parameter
    n, prefix, bits, fracs, radius, max_return, samples, V_depth = job
    res = find_parameter(KneadingTarget(n, prefix), precision_bits=bits)
    fmap = QuadMap(res.midpoint(), bits)
    theta = theta_and_tstar(fmap)
    # central branches may follow the critical orbit through the prescribed symbols only;
    # the zero padding beyond them is an artifact of the parameter search
    shadow = n + 3 * len(prefix) + 3
    system = build_induced_system(fmap, V_depth, InducingBudget(max_return=max_return, central_samples=samples,
                                                                central_max_shadow=shadow))
    plus, minus = orbit_sets(fmap)
    rows = []
    for frac in fracs:
        t = float(Fraction(frac) * Fraction(mpmath.nstr(theta.t_star, 20)))
        p = bowen_pressure(system, t, ell=1, include_tail=False).p
        sp = spread_measure(fmap, system, gibbs_weights(system, t, p))
        rep = mass_near_orbits(sp, plus, minus, radius)
        rows.append({"t_fraction": str(frac), "t": repr(t), "p": repr(p), **rep.as_dict()})
    return {"prefix": prefix, "c_mid": mpmath.nstr(res.midpoint(), 40), "t_star": _dec(theta.t_star),
            "theta": _dec(theta.theta), "shadow_limit": shadow, "branches": system.size, "samples": rows}


def cmd_oscillation(args) -> None:
    lead, L = args.lead, args.band
    prefixes = [lead + "1" * L, lead + "01" * (L // 2) + ("0" if L % 2 else "")]
    fracs = args.t_fraction or ["0.85", "0.9", "0.95"]
    jobs = [(args.n, p, args.bits or 512, fracs, args.radius, args.max_return, args.central_samples,
             args.V_depth) for p in prefixes]
    plus_run, minus_run = _pmap(_oscillation_one, jobs, args.threads)
    flip = all(float(a["mass_plus"]) > float(a["mass_minus"]) for a in plus_run["samples"]) and \
        all(float(b["mass_minus"]) > float(b["mass_plus"]) for b in minus_run["samples"])
    assumptions = ["qualitative proxy: Gibbs mass from discovered return branches only",
                   "central branch shadowing limited to the prescribed itinerary",
                   "t_* proxy from the periodic points p, p+ of the parameter itself"]
    _emit_json(args, _envelope(args, "oscillation", {"plus_band": plus_run, "minus_band": minus_run,
                                                     "flip": flip}, assumptions))
    if not flip:
        raise CheckFailed("dominant side did not flip between the two parameters")


# ------------------------------------------------------------------ parser

def _add_scheme(p, default_q: int = 400) -> None:
    p.add_argument("--xi", default="1", help="scheme parameter xi (decimal or fraction)")
    p.add_argument("--q", type=int, default=default_q)
    p.add_argument("--toy", action="store_true", help="use the toy scheme xi=1/4, q=2")
    p.add_argument("--relaxed", action="store_true", help="do not enforce the size hypotheses on q")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quadthermo", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker processes (output does not depend on it)")
    common.add_argument("--bits", type=int, default=None, help="working precision in bits")
    common.add_argument("--config", default=None, help="key=value file; command-line flags override it")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-appendix", parents=[common], help="evaluate the series inequality suite")
    p.add_argument("--xi", action="append", help="repeatable; paired with --q")
    p.add_argument("--q", type=int, action="append", help="repeatable; paired with --xi")
    p.add_argument("--tau-points", type=int, default=9)
    p.add_argument("--omega", action="append", default=None)
    p.add_argument("--relaxed", action="store_true")
    p.add_argument("--strict-domain", action="store_true", help="fail on grid points outside a hypothesis")
    p.set_defaults(func=cmd_verify_appendix)

    p = sub.add_parser("series", parents=[common], help="per-block sums of Pi(tau, lambda)")
    _add_scheme(p)
    p.add_argument("--sign", choices=["plus", "minus"], default="plus")
    p.add_argument("--tau", default="1")
    p.add_argument("--lambda", dest="lam", default="0")
    p.add_argument("--smax", type=int, default=3)
    p.set_defaults(func=cmd_series)

    for name, fn, helptext in (("schedule", cmd_schedule, "temperature ladder and block schedule"),
                               ("itinerary", cmd_itinerary, "hat and bit itineraries")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        _add_scheme(p)
        p.add_argument("--omega", default="0")
        p.add_argument("--m-max", type=int, default=4)
        p.add_argument("--adjust-parity", action="store_true", help="raise q by one when q + Xi is odd")
        if name == "itinerary":
            p.add_argument("--signs", default="(+)", help="band signs, e.g. '+-(+)' for +,-,+,+,...")
            p.add_argument("--length", type=int, default=64)
        p.set_defaults(func=fn)

    p = sub.add_parser("find-param", parents=[common], help="parameter realizing an itinerary prefix")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--prefix", action="append")
    p.add_argument("--all-length", type=int, default=0, help="also search every prefix of this length")
    p.add_argument("--depth", type=int, default=None)
    p.set_defaults(func=cmd_find_param)

    p = sub.add_parser("pressure", parents=[common], help="pressure curve by periodic orbits and inducing")
    p.add_argument("--c", required=True)
    p.add_argument("--n", type=int, default=3, help="V is the depth n+1 central piece")
    p.add_argument("--t-min", default="0")
    p.add_argument("--t-max", default="2")
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--method", choices=["periodic", "bowen", "both"], default="both")
    p.add_argument("--N", type=int, default=14, help="period for the periodic-orbit sum")
    p.add_argument("--ell", type=int, default=2, choices=[1, 2, 3])
    p.add_argument("--max-return", type=int, default=22)
    p.add_argument("--no-tail", action="store_true", help="omit the extrapolated return-time tail")
    for k, typ in (("q", int), ("xi", str), ("Xi", int), ("delta", str), ("omega", str),
                   ("tstar", str), ("chi", str)):
        p.add_argument(f"--env-{k}", dest=f"env_{k}", type=typ, default=None if k == "q" else "0")
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("measure", parents=[common], help="Gibbs proxy spread along orbits")
    p.add_argument("--c", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--p", default=None, help="default: Bowen root at t")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--max-return", type=int, default=16)
    p.add_argument("--central-samples", type=int, default=0)
    p.add_argument("--max-shadow", type=int, default=None)
    p.add_argument("--bin-width", type=float, default=1e-3)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("oscillation", parents=[common], help="flip of the dominant orbit between band signs")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--lead", default="00")
    p.add_argument("--band", type=int, default=8)
    p.add_argument("--t-fraction", action="append")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--max-return", type=int, default=16)
    p.add_argument("--central-samples", type=int, default=400)
    p.add_argument("--V-depth", dest="V_depth", type=int, default=3)
    p.set_defaults(func=cmd_oscillation)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if not args.config:
        return args
    sub = ap._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    with open(args.config, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{args.config}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            dest = key.replace("-", "_")
            if dest not in known:
                raise ValueError(f"{args.config}:{lineno}: unknown key {key!r} for {args.command}")
            act = known[dest]
            if isinstance(act, argparse._StoreTrueAction):
                defaults[dest] = val.lower() in ("1", "true", "yes")
            elif isinstance(act, argparse._AppendAction):
                defaults[dest] = [act.type(v) if act.type else v for v in val.split(",")]
            else:
                defaults[dest] = act.type(val) if act.type else val
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def run(argv: list[str] | None = None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(ap, argv)
        if getattr(args, "omega", None) is None and args.command == "verify-appendix":
            args.omega = ["0", "1", "4"]
        args.func(args)
    except CheckFailed as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_CHECK
    except (QuadThermoError, ValueError, OSError, ArithmeticError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
