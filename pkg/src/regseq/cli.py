"""Command-line surface: analyze, fourier, sample, validate, jsr.

stdout carries data (JSON or CSV), stderr carries diagnostics.  Exit codes:
0 success, 1 validation failure, 2 numeric certification failure, 3 input
error, 4 unsupported analysis (matrix-product constants with eigenvalue 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from gmpy2 import mpq

from . import models
from .asymptote import (
    AnalysisReport,
    EmpiricalSample,
    UnsupportedConstants,
    empirical_sample,
    full_report,
)
from .ball import BallError, Context
from .dirichlet import DirichletConfig, DirichletError, NearPole, eval_F, eval_G
from .fourier import FourierError, fourier_eval, nonvanishing_report
from .linrep import (
    LinRep,
    SchemaError,
    parse_linrep,
    serialize_linrep,
    summatory_direct,
    summatory_fast,
    term,
    matrix_f,
    vector_v,
)
from .spectral import SpectralError, sanity_eigen_vs_jsr

log = logging.getLogger("regseq.cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_INPUT = 3
EXIT_UNSUPPORTED = 4

_MODEL_EFFECTIVE_PERIOD = {}


def load_rep(args, *, enforce_mode: bool = True) -> tuple[LinRep, dict]:
    """Resolve --model / --input / --transducer into a representation."""
    hints: dict = {}
    sources = [s for s in (args.model, args.input, args.transducer) if s]
    if len(sources) != 1:
        raise SchemaError("$", "give exactly one of --model, --input, --transducer")
    if args.model:
        name = args.model
        if name == "sum-of-digits":
            return models.sum_of_digits(2), hints
        if name == "pascal":
            return models.pascal_rhombus(), hints
        if name == "stern-brocot":
            return models.stern_brocot(), hints
        if name.startswith("esthetic:"):
            q = int(name.split(":", 1)[1])
            hints["effective_period"] = 1 if q % 2 == 0 else 2
            return models.esthetic(q), hints
        raise SchemaError("model", f"unknown model {name!r}")
    if args.transducer:
        with open(args.transducer, "r", encoding="utf-8") as fh:
            t = models.parse_transducer(fh.read())
        hints["final_period"] = models.transducer_period(t)
        return models.transducer_to_linrep(t), hints
    with open(args.input, "r", encoding="utf-8") as fh:
        return parse_linrep(fh.read(), enforce_mode=enforce_mode), hints


def make_config(args) -> DirichletConfig:
    return DirichletConfig(n0=args.n0, precision_bits=args.precision)


def _ball_json(b):
    return b.to_json()


def _report_json(rpt: AnalysisReport, q: int, precision: int) -> dict:
    ctx = Context.get(precision)
    eigen = []
    for d in rpt.eigen_data:
        eigen.append({
            "value": _ball_json(d.lam),
            "alg_mult": d.alg_mult,
            "jordan_m": d.jordan_m,
            "separated": d.is_unit_distance_certified,
            "real": d.is_real,
        })
    jsr = {
        "rho_ell": [{"ell": l, "value": _ball_json_r(b)} for l, b in rpt.jsr.rho_ell],
        "rho_lower": _ball_json_r(rpt.jsr.rho_lower),
        "R": _ball_json_r(rpt.jsr.r_value),
        "witness": list(rpt.jsr.finiteness_witness)
        if rpt.jsr.finiteness_witness is not None else None,
        "note": rpt.jsr.note,
    }
    terms = []
    for t in rpt.expansion.terms:
        entry = {
            "lambda": _ball_json(t.datum.lam),
            "exponent": _ball_json(t.exponent),
            "k": t.k,
            "holder_bound": _ball_json_r(t.holder) if t.holder is not None else None,
        }
        if t.fluctuation is not None:
            entry["fluctuation"] = t.fluctuation.to_json()
        terms.append(entry)
    expansion = {
        "terms": terms,
        "error_omitted": rpt.expansion.error_omitted,
        "error_exponent": _ball_json_r(rpt.expansion.error_exponent)
        if rpt.expansion.error_exponent is not None else None,
        "error_log_power": rpt.expansion.error_log_power,
    }
    if rpt.expansion.constants is not None:
        c = rpt.expansion.constants
        expansion["constants"] = {
            "K_scalar": str(c["K_scalar"]),
            "theta": str(c["theta"]),
        }
    return {
        "q": q,
        "precision_bits": precision,
        "eigenvalues": eigen,
        "jsr": jsr,
        "expansion": expansion,
        "notes": rpt.notes,
    }


def _ball_json_r(b):
    from .ball import dyadic_to_decimal

    return {"mid": dyadic_to_decimal(b.mid), "rad": dyadic_to_decimal(b.rad)}


def cmd_analyze(args) -> int:
    rep, hints = load_rep(args)
    config = make_config(args)
    rpt = full_report(rep, config, ell_max=args.ell_max,
                      jsr_ell_max=args.jsr_ell_max,
                      effective_period_hint=hints.get("effective_period"),
                      threads=args.threads)
    out = _report_json(rpt, rep.q, config.precision_bits)
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_fourier(args) -> int:
    rep, hints = load_rep(args)
    config = make_config(args)
    rpt = full_report(rep, config, ell_max=args.ell_max,
                      jsr_ell_max=args.jsr_ell_max,
                      effective_period_hint=hints.get("effective_period"),
                      threads=args.threads)
    tables = [t.fluctuation.to_json() for t in rpt.expansion.terms
              if t.fluctuation is not None]
    json.dump({"tables": tables}, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    rep, hints = load_rep(args)
    config = make_config(args)
    rpt = full_report(rep, config, ell_max=args.degree,
                      jsr_ell_max=args.jsr_ell_max,
                      effective_period_hint=hints.get("effective_period"),
                      threads=args.threads)
    if not rpt.expansion.terms:
        log.error("no asymptotic terms above R; nothing to sample")
        return EXIT_VALIDATION
    term0 = rpt.expansion.terms[0]
    table = term0.fluctuation
    period = table.period if table is not None else 1
    ctx = Context.get(config.precision_bits)
    grid = [period * i / args.u_points for i in range(args.u_points)]
    samples = empirical_sample(rep, term0, grid, args.j_scale, config)
    writer = csv.writer(sys.stdout)
    writer.writerow(["u", "j", "empirical_re", "empirical_im",
                     "series_re", "series_im", "abs_diff"])
    degree = min(args.degree, table.ell_range()) if table is not None else 0
    for s in samples:
        if table is not None:
            val = fourier_eval(table, s.u, degree, ctx)
            sr, si = float(val.re.mid), float(val.im.mid)
        else:
            sr = si = 0.0
        d = abs(complex(s.value.real - sr, s.value.imag - si))
        writer.writerow([f"{s.u:.10g}", s.j, f"{s.value.real:.17g}",
                         f"{s.value.imag:.17g}", f"{sr:.17g}", f"{si:.17g}",
                         f"{d:.6g}"])
    return EXIT_OK


def cmd_validate(args) -> int:
    rep, _hints = load_rep(args, enforce_mode=False)
    failures = run_validation(rep, n_max=args.n_max,
                              precision=args.precision)
    for name, ok, detail in failures:
        print(f"{'PASS' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}")
    bad = [f for f in failures if not f[1]]
    if bad:
        log.error("first failing invariant: %s", bad[0][0])
        return EXIT_VALIDATION
    return EXIT_OK


def run_validation(rep: LinRep, n_max: int = 10**4, precision: int = 64):
    """Invariant suite: mode gate, recursion identities, fast/direct
    agreement, and the two-route functional-equation residual."""
    from .ball import CBall, RBall
    from .dirichlet import make_session, default_re_base, matrix_norm_upper
    import random

    results = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as e:  # noqa: BLE001 - reported, not raised
            ok, detail = False, f"{type(e).__name__}: {e}"
        results.append((name, ok, detail))

    def mode_gate():
        rep.validate()
        return True, ""

    check("mode-gate", mode_gate)

    def recursion():
        for n in range(0, 500):
            for r in range(rep.q):
                if rep.q * n + r == 0:
                    continue
                lhs = vector_v(rep, rep.q * n + r)
                from .exact import mat_vec

                rhs = mat_vec(rep.matrices[r], vector_v(rep, n))
                if tuple(lhs) != tuple(rhs):
                    return False, f"v({rep.q}*{n}+{r}) != A_{r} v({n})"
        return True, ""

    check("digit-recursion", recursion)

    def fast_direct():
        import random as _r

        _r.seed(7)
        points = sorted(_r.sample(range(0, n_max + 1), min(60, n_max)))
        vs = None
        for n in points:
            if summatory_direct(rep, n) != summatory_fast(rep, n)[1]:
                return False, f"X({n}) mismatch"
        return True, ""

    check("summatory-fast-vs-direct", fast_direct)

    def two_route():
        random.seed(11)
        cfg = DirichletConfig(n0=64, precision_bits=precision, cut=4096)
        m = matrix_norm_upper(rep)
        base = default_re_base(rep)
        ctx = Context.get(precision)
        for _ in range(5):
            sre = base + 0.3 + 1.2 * random.random()
            sim = 4 * random.random() - 2
            s = CBall(RBall.exact(gmpy_f(sre, precision)),
                      RBall.exact(gmpy_f(sim, precision)))
            sess = make_session(rep, s, 0, cfg)
            f_val = sess.f_value(0)
            g_val = sess.g_value(0)
            qj = sess.q_pow_jet(0)
            c_mat = sess.der.c
            for i in range(rep.d):
                for j in range(rep.d):
                    acc = f_val[i][j]
                    for t in range(rep.d):
                        if c_mat[i][t]:
                            acc = acc.sub(
                                f_val[t][j].mul(qj, ctx).scale_mpq(c_mat[i][t], ctx),
                                ctx)
                    acc = acc.sub(g_val[i][j], ctx)
                    if not acc.coeffs[0].contains_zero():
                        return False, f"residual excludes 0 at s={sre:.3f}+{sim:.3f}i"
        return True, ""

    check("two-route-functional-equation", two_route)
    return results


def gmpy_f(x, precision):
    from gmpy2 import mpfr

    return mpfr(x, precision)


def cmd_jsr(args) -> int:
    rep, _hints = load_rep(args)
    from .spectral import jsr_bounds

    bounds = jsr_bounds(rep, ell_max=args.jsr_ell_max,
                        precision=args.precision,
                        override_r=mpq(args.override_r) if args.override_r else None)
    out = {
        "rho_ell": [{"ell": l, "value": _ball_json_r(b)} for l, b in bounds.rho_ell],
        "rho_lower": _ball_json_r(bounds.rho_lower),
        "R": _ball_json_r(bounds.r_value),
        "witness": list(bounds.finiteness_witness)
        if bounds.finiteness_witness is not None else None,
        "note": bounds.note,
    }
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regseq",
        description="Certified asymptotics of summatory functions of "
                    "q-regular sequences")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", help="built-in model: sum-of-digits | "
                                       "esthetic:<q> | pascal | stern-brocot")
        p.add_argument("--input", help="JSON linear-representation file")
        p.add_argument("--transducer", help="transducer description file")
        p.add_argument("--precision", type=int, default=128,
                       help="working precision in bits (default 128)")
        p.add_argument("--n0", type=int, default=1024,
                       help="Dirichlet split point (default 1024)")
        p.add_argument("--ell-max", type=int, default=10, dest="ell_max",
                       help="Fourier index range (default 10)")
        p.add_argument("--jsr-ell-max", type=int, default=6, dest="jsr_ell_max",
                       help="product length for JSR bounds (default 6)")
        p.add_argument("--threads", type=int, default=None,
                       help="parallel workers (default REGSEQ_THREADS or 1)")

    p = sub.add_parser("analyze", help="full report: spectrum, JSR, expansion, tables")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("fourier", help="Fourier coefficient tables only")
    common(p)
    p.set_defaults(fn=cmd_fourier)

    p = sub.add_parser("sample", help="CSV of empirical vs series values")
    common(p)
    p.add_argument("--degree", type=int, default=1999,
                   help="series truncation degree (default 1999)")
    p.add_argument("--u-points", type=int, default=256, dest="u_points")
    p.add_argument("--j-scale", type=int, default=20, dest="j_scale")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("validate", help="run the invariant suite on an input")
    common(p)
    p.add_argument("--n-max", type=int, default=10**4, dest="n_max")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("jsr", help="joint-spectral-radius bounds")
    common(p)
    p.add_argument("--override-r", default=None, dest="override_r",
                   help="explicit rational override for R")
    p.set_defaults(fn=cmd_jsr)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=os.environ.get(
        "REGSEQ_LOG", "WARNING").upper(), format="%(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        os.environ["REGSEQ_THREADS"] = str(args.threads)
    try:
        return args.fn(args)
    except (SchemaError, FileNotFoundError, json.JSONDecodeError, ValueError) as e:
        log.error("input error: %s", e)
        return EXIT_INPUT
    except UnsupportedConstants as e:
        log.error("unsupported: %s", e)
        return EXIT_UNSUPPORTED
    except (BallError, SpectralError, DirichletError, FourierError) as e:
        log.error("certification failure: %s", e)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
