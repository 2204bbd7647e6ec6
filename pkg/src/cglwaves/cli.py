"""
cglwaves command-line interface.

Usage:
    cglwaves reduce --p 1 --q 0 --r 1j --c 0.5
    cglwaves laurent --equation cgl5 --family pole --terms 32
    cglwaves subeq-fit --ex 1 --ey 1 --ei 2 --digits 60
    cglwaves eval --ex 1 --ey 1 --ei 2 --real-line --points 200 --format csv
    cglwaves affixes --ex 1 --ey 1 --ei 2
    cglwaves landen-check --g2 -72 --g3 76
    cglwaves verify --ex 1 --ey 1 --ei 2 --samples 100 --seed 7

Every flag may also be given in a flat ``key=value`` file passed with
``--config``; flags on the command line win.  ``CGLWAVES_PRECISION`` sets the
default number of digits.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numerical
error (degenerate lattice, resonance, failed inversion).

CSV columns of ``eval``:
    xi_re, xi_im, M_re, M_im, psi_re, psi_im, dlogA_re, dlogA_im,
    residual_R1, residual_R2, residual_F
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import mpmath
import numpy as np
from mpmath import mp, mpf

from . import __version__
from .elliptic import periods_from_invariants
from .errors import CglError, NumericalError
from .landen import (landen_descend, landen_relations, landen_wp_identity,
                     landen_wp_sum_identity, landen_zeta_sigma_identity)
from .laurent import (default_terms, expand_pole_family, expand_zero_family,
                      leading_orders, to_records)
from .model import (CglParams, PhysicalParams, StatePoint, reduce_params,
                    residual_system, residual_system_scale)
from .solutions import (EllipticSliceParams, eval_dlogA_wp, eval_M_wp,
                        eval_psi_csi0, eval_psi_wp, lower_invariants,
                        pole_affixes, real_line_segment)
from .subequation import fit_subequation, reference_f4
from .verify import verify_slice, verify_subequation_pipeline

log = logging.getLogger("cglwaves")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_DIGITS = 50
CSV_COLUMNS = ("xi_re", "xi_im", "M_re", "M_im", "psi_re", "psi_im", "dlogA_re", "dlogA_im",
               "residual_R1", "residual_R2", "residual_F")

VERIFY_COLUMNS = ("check", "max_residual", "tolerance", "passed", "samples")

REDUCED_KEYS = ("e_r", "e_i", "d_r", "d_i", "g_r", "g_i", "csi")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- config

def read_config(path: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment; dashes and underscores are equivalent."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _merge_config(args, parser_defaults: dict):
    """Fill unset flags from the config file, then from the built-in defaults."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    for key, (default, kind) in parser_defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in conf:
            try:
                setattr(args, key, kind(conf[key]))
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config value for {key}: {exc}") from exc
        else:
            setattr(args, key, default)
    unknown = set(conf) - set(parser_defaults) - {"command"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return args


def _digits_default() -> int:
    env = os.environ.get("CGLWAVES_PRECISION")
    if env is None:
        return DEFAULT_DIGITS
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"CGLWAVES_PRECISION must be an integer, got {env!r}") from exc


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


# ---------------------------------------------------------------- parameters

def _slice_from(args) -> EllipticSliceParams:
    j = {"+i": 1j, "i": 1j, "-i": -1j}[args.j]
    try:
        return EllipticSliceParams(float(args.ex), float(args.ey), float(args.ei), j,
                                   int(args.csi_sign))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _reduced_from(args):
    """Reduced parameters at working precision: explicit values or the slice point."""
    explicit = {k: getattr(args, k) for k in REDUCED_KEYS if getattr(args, k, None) is not None}
    if explicit:
        return CglParams(**{k: mpf(v) for k, v in explicit.items()})
    ex, ey, ei = mpf(args.ex), mpf(args.ey), mpf(args.ei)
    csi = int(args.csi_sign) * mpmath.sqrt(48 * ex)
    return CglParams(e_i=ei, g_r=36 * ey, g_i=-3 * csi**2 / 16, csi=csi)


def _mp_str(x) -> str:
    return mpmath.nstr(x, mp.dps, min_fixed=-mp.inf, max_fixed=mp.inf)


def _cnum(z) -> list:
    """Complex number as ``[re, im]`` strings at working precision."""
    z = mpmath.mpc(z)
    return [_mp_str(z.real), _mp_str(z.imag)]


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- commands

def cmd_reduce(args) -> int:
    phys = PhysicalParams(p=args.p, q=args.q, r=args.r, gamma=args.gamma, c=args.c,
                          omega=args.omega)
    params = reduce_params(phys)
    _emit(args, _dump({"command": "reduce", "params": params.as_dict()}))
    return EXIT_OK


def cmd_laurent(args) -> int:
    params = _reduced_from(args)
    families = []
    if args.family == "pole":
        leads = leading_orders(params, args.equation)
        for idx, lead in enumerate(leads):
            fam = expand_pole_family(params, lead, args.terms)
            families.append({
                "index": idx, "alpha": _cnum(lead.alpha), "m0": _cnum(lead.m0),
                "fuchs_indices": [_cnum(x) for x in lead.fuchs_indices],
                "M": to_records(fam.coefficients_M, fam.valuation_M),
                "psi": to_records(fam.coefficients_psi, -1),
            })
    else:
        j = {"+i": 1j, "i": 1j, "-i": -1j}[args.j]
        fam = expand_zero_family(params, j, args.arb0, args.arb1, args.terms)
        families.append({"j": _cnum(j), "arb0": _cnum(args.arb0), "arb1": _cnum(args.arb1),
                         "M": to_records(fam.coefficients_M, fam.valuation_M),
                         "psi": to_records(fam.coefficients_psi, -1)})
    _emit(args, _dump({"command": "laurent", "equation": args.equation, "family": args.family,
                       "digits": mp.dps, "params": {k: _mp_str(mpf(v)) for k, v in
                                                    params.as_dict().items() if v is not None},
                       "families": families}))
    return EXIT_OK


def cmd_subeq_fit(args) -> int:
    params = _reduced_from(args)
    report = fit_subequation(params, equation=args.equation, m=args.m, j_max=args.j_max)
    out = {
        "command": "subeq-fit", "equation": args.equation, "m": args.m, "digits": mp.dps,
        "rank": report.rank, "nullity": report.nullity, "rows": report.n_rows,
        "columns": report.n_columns,
        "smallest_singular_values": [_mp_str(v) for v in report.singular_values[-3:]],
    }
    if report.solution is not None:
        clear = params.e_i**2 if args.equation == "cgl5" else params.d_i**2
        coeffs = report.solution.coefficients
        out["coefficients"] = [{"j": j, "k": k, "value": _cnum(c)}
                               for (j, k), c in sorted(coeffs.items()) if abs(c) > mpf(10) ** (-mp.dps // 2)]
        out["cleared_factor"] = _mp_str(mpf(clear))
        out["cleared_coefficients"] = [{"j": j, "k": k, "value": _cnum(c * clear)}
                                       for (j, k), c in sorted(coeffs.items())
                                       if abs(c) > mpf(10) ** (-mp.dps // 2)]
    _emit(args, _dump(out))
    return EXIT_OK


def _eval_points(args, s: EllipticSliceParams) -> np.ndarray:
    if args.real_line:
        return real_line_segment(s, args.points)
    a, b = args.xi_start, args.xi_end
    return a + (b - a) * np.linspace(0, 1, args.points)


def cmd_eval(args) -> int:
    s = _slice_from(args)
    xi = _eval_points(args, s)
    mj = eval_M_wp(s, xi)
    if s.ex > 0:
        psi, psi1 = eval_psi_wp(s, xi)
    else:
        psi = eval_psi_csi0(s.ey, xi)
        psi1 = -psi * mj.M1 / mj.M - s.e_i * mj.M**2 + s.g_r
    dl, _ = eval_dlogA_wp(s, xi)
    jet = StatePoint(mj.M, mj.M1, mj.M2, mj.M3, psi, psi1)
    r1, r2 = residual_system(s.params, jet)
    sc1, sc2 = residual_system_scale(s.params, jet)
    F = reference_f4(s.ex, s.ey, s.e_i, s.csi)
    rf = np.array([abs(complex(F(a, b))) / F.scale(a, b) for a, b in zip(mj.M, mj.M1)])
    rows = np.column_stack([xi.real, xi.imag, mj.M.real, mj.M.imag, psi.real, psi.imag,
                            dl.real, dl.imag, np.abs(r1) / sc1, np.abs(r2) / sc2, rf])
    if args.format == "json":
        _emit(args, _dump({"command": "eval", "columns": list(CSV_COLUMNS),
                           "rows": [[float(v) for v in row] for row in rows]}))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
        _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_affixes(args) -> int:
    s = _slice_from(args)
    _emit(args, _dump({"command": "affixes", "slice": {"ex": s.ex, "ey": s.ey, "e_i": s.e_i,
                                                       "j": args.j, "csi_sign": s.csi_sign},
                       "affixes": pole_affixes(s).to_dict()}))
    return EXIT_OK


def cmd_landen_check(args) -> int:
    if args.g2 is not None and args.g3 is not None:
        lower = periods_from_invariants(args.g2, args.g3)
        if args.root is None:
            # default to the root closest to the real axis
            root = min(lower.roots, key=lambda r: abs(complex(r).imag))
        else:
            root = lower.roots[args.root]
    else:
        s = _slice_from(args)
        lower = lower_invariants(s)
        root = s.ex
    pair = landen_descend(lower, root)
    rng = np.random.default_rng(args.seed)
    u = rng.uniform(-0.5, 0.5, (args.samples, 2))
    z = u[:, 0] * 2 * lower.omega + u[:, 1] * 2 * lower.omega_prime
    z = z[(lower.lattice_distance(z) > 1e-2 * abs(lower.omega))
          & (lower.lattice_distance(z - pair.h) > 1e-2 * abs(lower.omega))
          & (lower.lattice_distance(z + pair.h) > 1e-2 * abs(lower.omega))]
    rel = landen_relations(pair)
    zr, sr = landen_zeta_sigma_identity(pair, z)
    ident = {"wp": float(np.max(landen_wp_identity(pair, z))),
             "wp_sum": float(np.max(landen_wp_sum_identity(pair, z))),
             "zeta": float(np.max(zr)), "sigma": float(np.max(sr))}
    ok = max(rel.values()) < 1e-12 and max(ident.values()) < 1e-8
    c = lambda v: [float(complex(v).real), float(complex(v).imag)]  # noqa: E731
    _emit(args, _dump({
        "command": "landen-check", "pass": ok, "samples": int(len(z)),
        "lower": {"g2": c(lower.g2), "g3": c(lower.g3)},
        "upper": {"g2": c(pair.upper.g2), "g3": c(pair.upper.g3)},
        "e1": c(pair.e1), "E1": c(pair.E1),
        "relations": {k: float(v) for k, v in rel.items()}, "identities": ident,
    }))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    s = _slice_from(args)
    params = None
    if any(getattr(args, k, None) is not None for k in REDUCED_KEYS):
        # residuals use the given parameters; closed forms still come from the slice
        params = CglParams(**{k: float(v) for k, v in _reduced_from(args).as_dict().items()
                              if v is not None})
    report = verify_slice(s, n_samples=args.samples, seed=args.seed, params=params)
    if args.fit:
        report.extend(verify_subequation_pipeline([_reduced_from(args)]))
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(VERIFY_COLUMNS)
        for r in report.records:
            w.writerow([r.name, repr(r.max_residual), repr(r.tolerance), int(r.passed), r.samples])
        _emit(args, buf.getvalue())
    else:
        _emit(args, report.to_json(timings=not args.no_timings) + "\n")
    return EXIT_OK if report.overall else EXIT_FAIL


# ---------------------------------------------------------------- parser

def _add_slice(p, defaults):
    p.add_argument("--ex", type=float, help="slice parameter ex >= 0 (default 1)")
    p.add_argument("--ey", type=float, help="slice parameter ey (default 1)")
    p.add_argument("--ei", type=float, help="imaginary quintic coefficient e_i (default 2)")
    p.add_argument("--j", choices=("+i", "i", "-i"), help="branch j (default +i)")
    p.add_argument("--csi-sign", type=int, choices=(1, -1), help="sign of csi (default +1)")
    defaults.update(ex=(1.0, float), ey=(1.0, float), ei=(2.0, float), j=("+i", str),
                    csi_sign=(1, int))


def _add_reduced(p, defaults):
    for key in REDUCED_KEYS:
        p.add_argument(_flag(key), type=str, help=f"reduced parameter {key} (overrides the slice)")
        defaults[key] = (None, str)


def _add_output(p, defaults, formats=("json",), default="json"):
    p.add_argument("--output", "-o", help="output path (default: standard output)")
    p.add_argument("--format", choices=formats, help=f"output format (default {default})")
    p.add_argument("--digits", type=int, help="working precision in decimal digits (>= 15)")
    p.add_argument("--config", help="key=value file with defaults for any flag")
    defaults.update(output=(None, str), format=(default, str), digits=(None, int))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cglwaves", description=__doc__.split("\n\n")[0].strip(),
        epilog="CSV columns of eval: " + ", ".join(CSV_COLUMNS),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    table = {}

    p = sub.add_parser("reduce", help="map PDE coefficients to the reduced parameters")
    d = {}
    for key, default in (("p", 1), ("q", 0), ("r", 0)):
        p.add_argument(_flag(key), type=_complex, help=f"complex coefficient {key}")
        d[key] = (complex(default), _complex)
    for key in ("gamma", "c", "omega"):
        p.add_argument(_flag(key), type=float, help=f"real parameter {key} (default 0)")
        d[key] = (0.0, float)
    _add_output(p, d)
    table["reduce"] = (cmd_reduce, d)

    p = sub.add_parser("laurent", help="Laurent series of the pole or zero families")
    d = {}
    p.add_argument("--equation", choices=("cgl5", "cgl3"))
    p.add_argument("--family", choices=("pole", "zero"))
    p.add_argument("--terms", type=int, help="number of coefficients")
    p.add_argument("--arb0", type=_complex, help="zero family: leading coefficient of M")
    p.add_argument("--arb1", type=_complex, help="zero family: second free constant")
    d.update(equation=("cgl5", str), family=("pole", str), terms=(default_terms(), int),
             arb0=(1 + 0j, _complex), arb1=(0j, _complex))
    _add_slice(p, d)
    _add_reduced(p, d)
    _add_output(p, d)
    table["laurent"] = (cmd_laurent, d)

    p = sub.add_parser("subeq-fit", help="fit a first-order subequation to the Laurent families")
    d = {}
    p.add_argument("--equation", choices=("cgl5", "cgl3"))
    p.add_argument("--m", type=int, help="degree in u' (default 4)")
    p.add_argument("--j-max", type=int, help="highest order imposed (default (m+1)^2+4)")
    d.update(equation=("cgl5", str), m=(4, int), j_max=(None, int))
    _add_slice(p, d)
    _add_reduced(p, d)
    _add_output(p, d)
    table["subeq-fit"] = (cmd_subeq_fit, d)

    p = sub.add_parser("eval", help="evaluate M, psi, dlogA and residuals along a path")
    d = {}
    p.add_argument("--xi-start", type=_complex, help="first point of a straight path")
    p.add_argument("--xi-end", type=_complex, help="last point of a straight path")
    p.add_argument("--points", type=int, help="number of points (default 101)")
    p.add_argument("--real-line", action="store_true", default=None,
                   help="sample the real line of M between two consecutive poles")
    d.update(xi_start=(0.1 + 0.1j, _complex), xi_end=(0.3 + 0.2j, _complex), points=(101, int),
             real_line=(False, lambda v: str(v).lower() in ("1", "true", "yes")))
    _add_slice(p, d)
    _add_output(p, d, formats=("csv", "json"), default="csv")
    table["eval"] = (cmd_eval, d)

    p = sub.add_parser("affixes", help="pole affixes of M and psi as JSON")
    d = {}
    _add_slice(p, d)
    _add_output(p, d)
    table["affixes"] = (cmd_affixes, d)

    p = sub.add_parser("landen-check", help="Landen relations and identities")
    d = {}
    p.add_argument("--g2", type=_complex, help="lower invariant g2 (default: the slice lattice)")
    p.add_argument("--g3", type=_complex, help="lower invariant g3")
    p.add_argument("--root", type=int, choices=(0, 1, 2), help="index of the halved root (default: the real one)")
    p.add_argument("--samples", type=int, help="random points (default 50)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    d.update(g2=(None, _complex), g3=(None, _complex), root=(None, int), samples=(50, int),
             seed=(0, int))
    _add_slice(p, d)
    _add_output(p, d)
    table["landen-check"] = (cmd_landen_check, d)

    p = sub.add_parser("verify", help="run every cross-check at one slice point")
    d = {}
    p.add_argument("--samples", type=int, help="sample points (default 100)")
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--fit", action="store_true", default=None,
                   help="also run the subequation fit at this point")
    p.add_argument("--no-timings", action="store_true", default=None,
                   help="omit runtimes so reports are byte-reproducible")
    d.update(samples=(100, int), seed=(0, int),
             fit=(False, lambda v: str(v).lower() in ("1", "true", "yes")),
             no_timings=(False, lambda v: str(v).lower() in ("1", "true", "yes")))
    _add_slice(p, d)
    _add_reduced(p, d)
    _add_output(p, d, formats=("json", "csv"))
    table["verify"] = (cmd_verify, d)
    return parser, table


def run(argv=None) -> int:
    parser, table = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    handler, defaults = table[args.command]
    try:
        _merge_config(args, defaults)
        digits = args.digits if args.digits is not None else _digits_default()
        if digits < 15:
            raise UsageError("precision must be at least 15 digits")
        with mp.workdps(digits):
            return handler(args)
    except UsageError as exc:
        print(f"cglwaves: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"cglwaves: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CglError, ValueError) as exc:
        print(f"cglwaves: usage error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cglwaves: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
