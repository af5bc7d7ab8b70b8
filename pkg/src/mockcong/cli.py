"""Command-line front end.

Data goes to stdout (or ``--output``), progress to stderr.  Exit codes:
0 success, 1 counterexample, 2 invalid configuration, 3 window or resource
infeasible.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import re
import sys
from pathlib import Path
from typing import Optional

from mockcong import __version__
from mockcong.bounds import pipeline_bound_report
from mockcong.cachefile import (
    CacheFormatError,
    atomic_write_bytes,
    default_cache_dir,
    read_cache,
    series_checksum,
    write_cache,
)
from mockcong.catalog import CatalogError, expand_series, get_spec, load_catalog, reindex_to_F
from mockcong.congruence import (
    NoAdmissibleA,
    Status,
    assemble_congruence,
    m_progression,
    scan_progressions,
    verify_progression,
)
from mockcong.hecke import HeckeContext, annihilation_check, hecke_t_p2, treneer_projection
from mockcong.pipeline import (
    EXIT_COUNTEREXAMPLE,
    EXIT_INFEASIBLE,
    EXIT_INVALID,
    EXIT_OK,
    PipelineConfig,
    PipelineError,
    drop_principal_part,
    run_pipeline,
)
from mockcong.qseries import ModulusMismatch, TruncatedSeries, WindowError, reduce_mod
from mockcong.twist import hat_filter, twist_coefficients

TOOLKIT = "mockcong"


class ConfigError(ValueError):
    pass


def _progress(args):
    if getattr(args, "quiet", False):
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


# --- series inputs ------------------------------------------------------------

_CACHE_NAME = re.compile(r"^(?P<name>[A-Za-z0-9_]+)-(?P<mod>exact|m\d+)-t(?P<trunc>\d+)\.qs1$")


def _cache_path(name: str, modulus: Optional[int], trunc: int) -> Path:
    tag = "exact" if modulus is None else f"m{modulus}"
    return default_cache_dir() / f"{name}-{tag}-t{trunc}.qs1"


def _find_cached(name: str, modulus: Optional[int], trunc: int) -> Optional[Path]:
    root = default_cache_dir()
    if not root.is_dir():
        return None
    tag = "exact" if modulus is None else f"m{modulus}"
    best = None
    for path in root.iterdir():
        m = _CACHE_NAME.match(path.name)
        if m and m["name"] == name and m["mod"] == tag and int(m["trunc"]) >= trunc:
            if best is None or int(m["trunc"]) < int(_CACHE_NAME.match(best.name)["trunc"]):
                best = path
    return best


def load_series(args, trunc: Optional[int] = None, say=None) -> tuple[TruncatedSeries, str, dict]:
    """The ``--series`` input: a cache file path or a catalog name expanded to ``trunc``."""
    source = args.series
    if os.path.isfile(source):
        s = read_cache(source)
        info = {"cache": str(source)}
        if args.mod is not None and s.modulus != args.mod:
            s = reduce_mod(s, args.mod)
        return s, Path(source).stem, info
    trunc = trunc if trunc is not None else args.trunc
    if trunc is None:
        raise ConfigError("--trunc is required when --series names a catalog entry")
    try:
        spec = get_spec(source)
    except CatalogError as exc:
        raise ConfigError(str(exc)) from None
    cached = None if getattr(args, "no_cache", False) else _find_cached(spec.name, args.mod, trunc)
    if cached is not None:
        s = read_cache(cached)
        if s.trunc > trunc:
            s = TruncatedSeries._trusted(s.val, s.coeffs[: trunc - s.val], s.modulus)
        return s, spec.name, {"cache": str(cached)}
    if say:
        say(f"expanding {spec.name} to {trunc} terms" + ("" if args.mod is None else f" mod {args.mod}"))
    return expand_series(spec, trunc, args.mod), spec.name, {}


# --- output ---------------------------------------------------------------------


def _envelope(command: str, args, result: dict, inputs: dict) -> dict:
    return {
        "toolkit": TOOLKIT,
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output", "format", "quiet")},
        "inputs": inputs,
        "result": result,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _text_lines(obj, prefix="") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            lines.extend(_text_lines(v, f"{prefix}{k}." if isinstance(v, (dict, list)) and v else f"{prefix}{k}"))
        return lines
    if isinstance(obj, list):
        if all(not isinstance(x, (dict, list)) for x in obj):
            return [f"{prefix.rstrip('.')}: {' '.join(str(x) for x in obj)}"]
        for i, v in enumerate(obj):
            lines.extend(_text_lines(v, f"{prefix}{i}."))
        return lines
    return [f"{prefix.rstrip('.')}: {'' if obj is None else obj}"]


def emit(args, command: str, result: dict, inputs: Optional[dict] = None) -> None:
    doc = _envelope(command, args, result, inputs or {})
    if args.format == "structured":
        text = json.dumps(doc, sort_keys=True, indent=2, default=str) + "\n"
    else:
        text = "\n".join(_text_lines({"command": command, **result})) + "\n"
    if args.output:
        atomic_write_bytes(args.output, [text.encode()])
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _series_summary(s: TruncatedSeries, head: int = 12) -> dict:
    return {
        "val": s.val,
        "trunc": s.trunc,
        "modulus": s.modulus,
        "checksum": series_checksum(s),
        "head": [int(c) for c in s.coeffs[:head]],
    }


def _write_series(args, s: TruncatedSeries, default: Path) -> str:
    path = Path(args.cache_out) if args.cache_out else default
    write_cache(s, path)
    return str(path)


# --- commands -------------------------------------------------------------------


def cmd_expand(args) -> int:
    spec = get_spec(args.series)
    say = _progress(args)
    if say:
        say(f"expanding {spec.name} to {args.trunc} terms")
    s = expand_series(spec, args.trunc, args.mod)
    path = _write_series(args, s, _cache_path(spec.name, args.mod, args.trunc))
    emit(args, "expand", {"series": spec.name, "cache": path, **_series_summary(s)})
    return EXIT_OK


def cmd_twist(args) -> int:
    s, name, info = load_series(args, say=_progress(args))
    if args.reindex:
        s = reindex_to_F(s, get_spec(args.series) if not os.path.isfile(args.series) else (args.delta, args.tau))
    if args.mode == "hat":
        out = hat_filter(s, args.Q, path=args.path)
    else:
        out = twist_coefficients(s, args.Q)
    default = default_cache_dir() / f"{name}-{args.mode}Q{args.Q}-t{out.trunc}.qs1"
    path = _write_series(args, out, default)
    emit(args, "twist", {"Q": args.Q, "mode": args.mode, "path": args.path, "cache": path, **_series_summary(out)},
         {**info, "checksum": series_checksum(s)})
    return EXIT_OK


def cmd_project(args) -> int:
    s, name, info = load_series(args, say=_progress(args))
    out = treneer_projection(s, args.ell, args.alpha)
    if args.drop_principal:
        out = drop_principal_part(out)
    default = default_cache_dir() / f"{name}-proj{args.ell}a{args.alpha}-t{out.trunc}.qs1"
    path = _write_series(args, out, default)
    emit(args, "project", {"ell": args.ell, "alpha": args.alpha, "cache": path, **_series_summary(out)},
         {**info, "checksum": series_checksum(s)})
    return EXIT_OK


def cmd_hecke(args) -> int:
    s, name, info = load_series(args, say=_progress(args))
    ctx = HeckeContext(args.p, args.lam, args.chi, args.ell_pow, args.level)
    inputs = {**info, "checksum": series_checksum(s)}
    if args.check:
        bound = args.bound if args.bound is not None else (s.trunc - 1) // (args.p**2)
        res = annihilation_check(s, ctx, bound, sturm=args.sturm)
        emit(args, "hecke", {
            "p": res.p, "lambda": args.lam, "chi_p": args.chi, "modulus": res.modulus, "bound": res.bound,
            "window": res.window, "annihilated": res.annihilated, "witness": res.witness,
            "sturm_bound": res.sturm_bound, "sturm_certified": res.sturm_certified,
        }, inputs)
        return EXIT_OK if res.annihilated else EXIT_COUNTEREXAMPLE
    out = hecke_t_p2(s, ctx)
    default = default_cache_dir() / f"{name}-T{args.p}-t{out.trunc}.qs1"
    path = _write_series(args, out, default)
    emit(args, "hecke", {"p": args.p, "lambda": args.lam, "chi_p": args.chi, "cache": path, **_series_summary(out)},
         inputs)
    return EXIT_OK


def cmd_bounds(args) -> int:
    v = None if args.pessimistic else args.v
    rep = pipeline_bound_report(args.N, args.Q, args.ell, args.j, beta=args.beta, v=v, r=args.r,
                                max_B_bits=args.max_B_bits)
    emit(args, "bounds", rep.to_dict())
    return EXIT_OK


def _cert_result(cert) -> dict:
    return cert.to_dict()


def cmd_verify(args) -> int:
    needed = args.A * args.horizon + args.B + 1
    s, name, info = load_series(args, trunc=args.trunc if args.trunc is not None else needed, say=_progress(args))
    checksum = series_checksum(s)
    cert = verify_progression(s, args.A, args.B, args.mod, args.horizon, series_id=name, checksum=checksum)
    emit(args, "verify", _cert_result(cert), {**info, "checksum": checksum})
    return EXIT_OK if cert.status is not Status.COUNTEREXAMPLE else EXIT_COUNTEREXAMPLE


def cmd_scan(args) -> int:
    needed = max(args.A) * (args.horizon + 1)
    s, name, info = load_series(args, trunc=args.trunc if args.trunc is not None else needed, say=_progress(args))
    checksum = series_checksum(s)
    certs = scan_progressions(s, args.mod, args.A, args.horizon, series_id=name, threads=args.threads,
                              checksum=checksum)
    emit(args, "scan", {"hits": [[c.A, c.B] for c in certs], "certificates": [c.to_dict() for c in certs]},
         {**info, "checksum": checksum})
    return EXIT_OK


def cmd_assemble(args) -> int:
    spec = get_spec(args.series) if args.series else (args.delta, args.tau)
    asm = assemble_congruence(args.p, args.ell, args.m, args.Q, spec, allow_q_equals_ell=args.allow_q_equals_ell,
                              cap=args.cap)
    result = asm.to_dict()
    target = m_progression(asm.A_mod, asm.B, asm.delta, asm.tau)
    result["M_progression"] = list(target) if target else None
    emit(args, "assemble", result)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = PipelineConfig(
        series=args.series, trunc=args.trunc, ell=args.ell, j=args.j, Q=args.Q,
        allow_q_equals_ell=args.allow_q_equals_ell, alpha=args.alpha, beta=args.beta,
        min_ord_div=args.min_ord_div, min_ord_nondiv=args.min_ord_nondiv, lam=args.lam, chi_disc=args.chi_disc,
        p_max=args.p_max, p_class=args.p_class, bound=args.bound, min_bound=args.min_bound, horizon=args.horizon,
        v=args.v, r=args.r, threads=args.threads,
    )
    report = run_pipeline(cfg, progress=_progress(args))
    emit(args, "pipeline", report.to_dict(), {"checksum": report.steps[0]["checksum"]} if report.steps else {})
    return report.exit_code


# --- parser ---------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--output", help="write the report here (atomically) instead of stdout")
    p.add_argument("--quiet", action="store_true", help="no progress messages on stderr")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _series_args(p: argparse.ArgumentParser, need_mod: bool = False) -> None:
    p.add_argument("--series", required=True, help="catalog name or cache file path")
    p.add_argument("--trunc", type=int)
    p.add_argument("--mod", type=int, required=need_mod)
    p.add_argument("--no-cache", action="store_true", help="ignore existing caches")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mockcong", description="Congruences for mock theta functions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", help="expand a catalog series and write a cache")
    p.add_argument("--series", required=True, choices=sorted(load_catalog()))
    p.add_argument("--trunc", type=int, required=True)
    p.add_argument("--mod", type=int)
    p.add_argument("--cache-out")
    _common(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("twist", help="hat filter or plain quadratic twist")
    _series_args(p)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--mode", choices=("hat", "twist"), default="hat")
    p.add_argument("--path", choices=("direct", "composite"), default="direct")
    p.add_argument("--reindex", action=argparse.BooleanOptionalAction, default=True,
                   help="move to F = q^tau M(q^delta) first")
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--tau", type=int, default=0)
    p.add_argument("--cache-out")
    _common(p)
    p.set_defaults(func=cmd_twist)

    p = sub.add_parser("project", help="Treneer projection")
    _series_args(p)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--alpha", type=int, default=0)
    p.add_argument("--drop-principal", action="store_true",
                   help="restrict to exponents >= 0 (fails if the principal part is nonzero)")
    p.add_argument("--cache-out")
    _common(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("hecke", help="apply T(p^2) or check annihilation")
    _series_args(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--lam", type=int, required=True)
    p.add_argument("--chi", type=int, default=1)
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--ell-pow", type=int)
    p.add_argument("--check", action="store_true")
    p.add_argument("--bound", type=int)
    p.add_argument("--sturm", type=int)
    p.add_argument("--cache-out")
    _common(p)
    p.set_defaults(func=cmd_hecke)

    p = sub.add_parser("bounds", help="effective bounds for the ambient space")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--N", type=int, required=True, help="level of the completed form divided by 4")
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--beta", type=int, default=0)
    p.add_argument("--v", type=int, default=0)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--pessimistic", action="store_true", help="estimate v from coefficient sizes")
    p.add_argument("--max-B-bits", type=int, default=1 << 16)
    _common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("scan", help="scan all residues B < A for each A")
    _series_args(p, need_mod=True)
    p.add_argument("--A", type=int, nargs="+", required=True)
    p.add_argument("--horizon", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="verify one progression")
    _series_args(p, need_mod=True)
    p.add_argument("--A", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("assemble", help="congruence data from (p, ell, m, Q)")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--series", help="catalog entry supplying delta and tau")
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--tau", type=int, default=0)
    p.add_argument("--allow-q-equals-ell", action="store_true")
    p.add_argument("--cap", type=int)
    _common(p)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("pipeline", help="expand, twist, project, hunt, assemble and verify")
    p.add_argument("--series", required=True)
    p.add_argument("--trunc", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--Q", type=int, help="twist prime (default: smallest admissible)")
    p.add_argument("--allow-q-equals-ell", action="store_true", help="permit Q = ell")
    p.add_argument("--alpha", type=int)
    p.add_argument("--beta", type=int)
    p.add_argument("--min-ord-div", type=int)
    p.add_argument("--min-ord-nondiv", type=int)
    p.add_argument("--lam", type=int, help="override the weight parameter lambda")
    p.add_argument("--chi-disc", type=int, help="override the catalog character discriminant")
    p.add_argument("--p-max", type=int, default=100, help="largest Hecke prime tried")
    p.add_argument("--p-class", choices=("restricted", "all"), default="restricted",
                   help="restricted: only p = -1 mod level*ell^j")
    p.add_argument("--bound", type=int, help="annihilation check bound (default: full window)")
    p.add_argument("--min-bound", type=int, default=50, help="skip primes whose window is shorter")
    p.add_argument("--horizon", type=int, help="progression horizon (default: largest feasible)")
    p.add_argument("--v", type=int, default=0)
    p.add_argument("--r", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except WindowError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MemoryError:
        print("infeasible: out of memory", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, CatalogError, CacheFormatError, ModulusMismatch, NoAdmissibleA, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
