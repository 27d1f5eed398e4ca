"""Deterministic sweep CLI: protocol curves, phase-loss circles, optima.

Subcommands
    sweep      success probability over a (phi, od_b, p_de) grid
    circle     phase-loss circle points for given blockaded optical depths
    opt-phase  optimal phase and success per optical depth, with scaling fits
    selftest   quick simulator-versus-formula and circle consistency check

Exit codes: 0 success, 1 usage error, 2 numerical/model error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, TextIO

from . import analytics, protocols
from .rydberg import loss_from_phase

USAGE_ERROR, NUMERICAL_ERROR, IO_ERROR = 1, 2, 3

ANGLE_GRAMMAR = """\
angle grammar (BNF):
  angle  := expr | expr ":" expr ":" INT      (range: INT >= 2 points, inclusive)
  expr   := ["-"] factor { ("*" | "/") factor }
  factor := "pi" | NUMBER
examples: pi, pi/3, 2*pi/3, 0.875, -1/11, 0:pi:128
"""

PROTOCOLS = ("bm", "evl", "ghz", "cnot", "factorization", "router")

_FORMULA: dict[str, Callable[..., float]] = {
    "bm": analytics.p_bell_measurement,
    "evl": analytics.p_evl_bell_measurement,
    "ghz": analytics.p_ghz,
    "cnot": analytics.p_cnot,
    "factorization": analytics.p_factorization,
}

_ANALYTIC_NAME = {
    "bm": "bell_measurement",
    "evl": "evl_bell_measurement",
    "ghz": "ghz",
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def parse_pi_expr(text: str) -> float:
    """Evaluate a tiny angle expression: optional sign, pi and numbers joined by * or /."""
    s = text.strip()
    if not s:
        raise CliError(f"empty angle expression in {text!r}", USAGE_ERROR)
    sign = 1.0
    if s.startswith("-"):
        sign = -1.0
        s = s[1:]
    tokens: list[str] = []
    cur = ""
    for ch in s:
        if ch in "*/":
            tokens.extend((cur, ch))
            cur = ""
        else:
            cur += ch
    tokens.append(cur)
    try:
        value = _factor(tokens[0])
        for op, tok in zip(tokens[1::2], tokens[2::2]):
            value = value * _factor(tok) if op == "*" else value / _factor(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"bad angle expression {text!r}: {exc}", USAGE_ERROR) from None
    return sign * value


def _factor(token: str) -> float:
    token = token.strip()
    if token == "pi":
        return math.pi
    return float(token)


def parse_phi_spec(text: str) -> list[float]:
    """A single angle or an inclusive ``start:stop:points`` range."""
    if ":" not in text:
        return [parse_pi_expr(text)]
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"range must be start:stop:points, got {text!r}", USAGE_ERROR)
    start, stop = parse_pi_expr(parts[0]), parse_pi_expr(parts[1])
    try:
        n = int(parts[2])
    except ValueError:
        raise CliError(f"point count must be an integer, got {parts[2]!r}", USAGE_ERROR) from None
    if n < 2:
        raise CliError("range needs at least 2 points", USAGE_ERROR)
    return [start + (stop - start) * i / (n - 1) for i in range(n)]


def _parse_float_list(text: str) -> list[float]:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        out.append(math.inf if piece in ("inf", "Inf", "INF") else float(piece))
    return out


def _fmt(x: float) -> str:
    return "%.12g" % x


def _workers() -> int:
    env = os.environ.get("NLR_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise CliError(f"NLR_THREADS must be an integer, got {env!r}", USAGE_ERROR) from None
        if n < 1:
            raise CliError("NLR_THREADS must be >= 1", USAGE_ERROR)
        return n
    return min(8, os.cpu_count() or 1)


# --------------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepPoint:
    phi: float
    od_b: float
    p_de: float
    phi1: float


def _simulated(protocol: str, pt: SweepPoint) -> float:
    if protocol == "bm":
        return protocols.run_bell_measurement(pt.phi, pt.od_b, pt.p_de, pt.phi1).p_success
    if protocol == "evl":
        return protocols.run_evl_bell_measurement(pt.phi, pt.od_b, pt.p_de).p_success
    if protocol == "ghz":
        return protocols.run_ghz(pt.phi, pt.od_b, pt.p_de, pt.phi1).p_success
    if protocol == "cnot":
        return protocols.simulated_cnot_success(pt.phi, pt.od_b, pt.p_de, pt.phi1)
    if protocol == "factorization":
        return protocols.simulated_factorization_success(pt.phi, pt.od_b, pt.p_de, pt.phi1)
    raise CliError(f"no simulator engine for protocol {protocol!r}", NUMERICAL_ERROR)


def _router_rows(pt: SweepPoint, engine: str) -> list[dict]:
    """Three rows per point: pair at single port, split pair, pair at pair port."""
    rows = []
    try:
        if engine in ("simulator", "both"):
            sim = protocols.run_router(pt.phi, pt.od_b, 2, pt.phi1)
        d = None
        if engine in ("formula", "both"):
            from .rydberg import detuned_params

            d = detuned_params(pt.phi, pt.od_b, pt.phi1)
    except ValueError:
        return [_row(pt, f"router-{k}", engine, None, None, "unreachable") for k in ("uu", "uw", "ww")]
    if d is not None:
        t1 = 1.0 - d.tau1
        pair = math.sqrt(t1 * (1.0 - d.tau2))
        a = 0.5 * (pair * math.cos(pt.phi) - t1)
        b = 0.5 * (pair * math.cos(pt.phi) + t1)
        c2 = t1 * (1.0 - d.tau2) * math.sin(pt.phi) ** 2
        formula = {"uu": b * b, "uw": 0.5 * c2, "ww": a * a}
    for key, counts in (("uu", (2, 0)), ("uw", (1, 1)), ("ww", (0, 2))):
        f_val = formula[key] if engine in ("formula", "both") else None
        s_val = sim.get(counts, 0.0) if engine in ("simulator", "both") else None
        rows.append(_row(pt, f"router-{key}", engine, f_val, s_val, "ok"))
    return rows


def _row(pt: SweepPoint, protocol: str, engine: str, formula: Optional[float], sim: Optional[float], status: str) -> dict:
    return {
        "phi": pt.phi,
        "od_b": pt.od_b,
        "p_de": pt.p_de,
        "phi1": pt.phi1,
        "protocol": protocol,
        "engine": engine,
        "formula": formula,
        "sim": sim,
        "status": status,
    }


def _sweep_point_rows(protocol: str, engine: str, pt: SweepPoint) -> list[dict]:
    if protocol == "router":
        return _router_rows(pt, engine)
    try:
        f_val = None
        if engine in ("formula", "both"):
            if protocol == "evl":
                f_val = analytics.p_evl_bell_measurement(pt.phi, pt.od_b, pt.p_de)
            else:
                f_val = _FORMULA[protocol](pt.phi, pt.od_b, pt.p_de, pt.phi1)
        s_val = _simulated(protocol, pt) if engine in ("simulator", "both") else None
    except ValueError:
        return [_row(pt, protocol, engine, None, None, "unreachable")]
    return [_row(pt, protocol, engine, f_val, s_val, "ok")]


def _emit_rows(rows: list[dict], engine: str, fmt: str, out: TextIO) -> None:
    both = engine == "both"
    header = ["phi", "od_b", "p_de", "phi1", "protocol", "engine", "probability"]
    if both:
        header += ["probability_sim", "abs_delta"]
    header.append("status")
    max_delta = 0.0
    if fmt == "csv":
        out.write(",".join(header) + "\n")
        for r in rows:
            prob = r["sim"] if engine == "simulator" else r["formula"]
            cells = [_fmt(r["phi"]), _fmt(r["od_b"]), _fmt(r["p_de"]), _fmt(r["phi1"]), r["protocol"], r["engine"]]
            cells.append("" if prob is None else _fmt(prob))
            if both:
                if r["formula"] is None or r["sim"] is None:
                    cells += ["", ""]
                else:
                    delta = abs(r["formula"] - r["sim"])
                    max_delta = max(max_delta, delta)
                    cells += [_fmt(r["sim"]), _fmt(delta)]
            cells.append(r["status"])
            out.write(",".join(cells) + "\n")
        if both:
            out.write(f"# max_abs_delta = {_fmt(max_delta)}\n")
    else:
        records = []
        for r in rows:
            prob = r["sim"] if engine == "simulator" else r["formula"]
            rec = {
                "phi": _jsonf(r["phi"]),
                "od_b": _jsonf(r["od_b"]),
                "p_de": _jsonf(r["p_de"]),
                "phi1": _jsonf(r["phi1"]),
                "protocol": r["protocol"],
                "engine": r["engine"],
                "probability": None if prob is None else _jsonf(prob),
                "status": r["status"],
            }
            if both:
                good = r["formula"] is not None and r["sim"] is not None
                rec["probability_sim"] = _jsonf(r["sim"]) if good else None
                rec["abs_delta"] = _jsonf(abs(r["formula"] - r["sim"])) if good else None
                if good:
                    max_delta = max(max_delta, abs(r["formula"] - r["sim"]))
            records.append(rec)
        doc: object = records if not both else {"records": records, "max_abs_delta": _jsonf(max_delta)}
        json.dump(doc, out, indent=2)
        out.write("\n")


def _jsonf(x: float) -> object:
    if math.isinf(x):
        return "inf"
    return float(_fmt(x))


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}", IO_ERROR) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"bad config file: {exc}", USAGE_ERROR) from None
        for key in ("protocol", "phi", "odb", "pde", "phi1_ratio", "engine", "out", "format"):
            if key in cfg and getattr(args, key) in (None,):
                setattr(args, key, cfg[key])
    protocol = args.protocol or "bm"
    if protocol not in PROTOCOLS:
        raise CliError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}", USAGE_ERROR)
    engine = {"sim": "simulator"}.get(args.engine or "formula", args.engine or "formula")
    if engine not in ("formula", "simulator", "both"):
        raise CliError(f"unknown engine {args.engine!r}", USAGE_ERROR)
    phis = parse_phi_spec(args.phi if args.phi is not None else "0:pi:128")
    ods = _parse_float_list(args.odb) if args.odb is not None else [math.inf]
    pdes = _parse_float_list(args.pde) if args.pde is not None else [1.0]
    ratio = parse_pi_expr(args.phi1_ratio) if args.phi1_ratio is not None else 0.0
    if protocol == "evl" and ratio != 0.0:
        raise CliError("the ancilla-assisted protocol has no detuned variant; use --phi1-ratio 0", USAGE_ERROR)
    points = [
        SweepPoint(phi=phi, od_b=od, p_de=pde, phi1=ratio * phi)
        for phi in phis
        for od in ods
        for pde in pdes
    ]
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        chunks = list(pool.map(lambda pt: _sweep_point_rows(protocol, engine, pt), points))
    rows = [r for chunk in chunks for r in chunk]
    return _write_output(args.out, lambda fh: _emit_rows(rows, engine, args.format or "csv", fh))


# -------------------------------------------------------------------- circle


def cmd_circle(args: argparse.Namespace) -> int:
    ods = _parse_float_list(args.odb) if args.odb is not None else [3.5, 8.0]
    points = args.points
    if points < 2:
        raise CliError("--points must be >= 2", USAGE_ERROR)

    def emit(fh: TextIO) -> None:
        fh.write("phi,od_b,branch,eps,tau\n")
        for od in ods:
            if math.isinf(od):
                raise CliError("circle output needs a finite od_b", USAGE_ERROR)
            radius = od / 4.0
            for branch in ("lower", "upper"):
                for i in range(points):
                    phi = -radius + 2.0 * radius * i / (points - 1)
                    cp = loss_from_phase(phi, od, branch)
                    fh.write(
                        ",".join((_fmt(phi), _fmt(od), branch, _fmt(cp.eps), _fmt(cp.tau))) + "\n"
                    )

    return _write_output(args.out, emit)


# ----------------------------------------------------------------- opt-phase


def _loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    pairs = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if y > 0.0]
    n = len(pairs)
    if n < 2:
        return math.nan
    mx = sum(p[0] for p in pairs) / n
    my = sum(p[1] for p in pairs) / n
    sxx = sum((p[0] - mx) ** 2 for p in pairs)
    sxy = sum((p[0] - mx) * (p[1] - my) for p in pairs)
    return sxy / sxx


def cmd_opt_phase(args: argparse.Namespace) -> int:
    protocol = args.protocol or "bm"
    if protocol not in _ANALYTIC_NAME:
        raise CliError(f"opt-phase supports protocols {', '.join(_ANALYTIC_NAME)}", USAGE_ERROR)
    if args.odb is None:
        ods = [60.0 * (2000.0 / 60.0) ** (i / 19) for i in range(20)]
    elif ":" in args.odb:
        lo_s, hi_s, n_s = args.odb.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
        if n < 2:
            raise CliError("od_b range needs at least 2 points", USAGE_ERROR)
        ods = [lo * (hi / lo) ** (i / (n - 1)) for i in range(n)]
    else:
        ods = _parse_float_list(args.odb)
    pde = float(args.pde) if args.pde is not None else 1.0
    name = _ANALYTIC_NAME[protocol]
    results = [analytics.find_optimal_phase(name, od, pde) for od in ods]

    def emit(fh: TextIO) -> None:
        fh.write("od_b,phi_opt,p_opt\n")
        for r in results:
            fh.write(",".join((_fmt(r.od_b), _fmt(r.phi_opt), _fmt(r.p_opt))) + "\n")
        finite = [r for r in results if not math.isinf(r.od_b)]
        infid = _loglog_slope([r.od_b for r in finite], [1.0 - r.p_opt for r in finite])
        gap = _loglog_slope([r.od_b for r in finite], [math.pi - r.phi_opt for r in finite])
        fh.write(f"# infidelity_exponent = {_fmt(infid)}\n")
        fh.write(f"# phase_gap_exponent = {_fmt(gap)}\n")

    return _write_output(args.out, emit)


# ------------------------------------------------------------------ selftest


def cmd_selftest(args: argparse.Namespace) -> int:
    del args
    worst = 0.0
    for phi in (math.pi / 4, math.pi / 3, 2.5):
        for od in (math.inf, 30.0):
            for name, form, sim in (
                ("bm", analytics.p_bell_measurement, lambda p, o: protocols.run_bell_measurement(p, o, 0.95).p_success),
                ("evl", analytics.p_evl_bell_measurement, lambda p, o: protocols.run_evl_bell_measurement(p, o, 0.95).p_success),
                ("ghz", analytics.p_ghz, lambda p, o: protocols.run_ghz(p, o, 0.95).p_success),
            ):
                delta = abs(form(phi, od, 0.95) - sim(phi, od))
                worst = max(worst, delta)
                print(f"{name} phi={_fmt(phi)} od_b={_fmt(od)} |delta|={delta:.3e}")
    circle_worst = 0.0
    for i in range(200):
        od = 5.0 + i * 0.7
        phi = (od / 4.0) * (i % 97) / 97.0
        cp = loss_from_phase(phi, od)
        resid = abs((cp.eps / 2.0 - od / 4.0) ** 2 + phi ** 2 - (od / 4.0) ** 2)
        circle_worst = max(circle_worst, resid)
    print(f"circle max residual = {circle_worst:.3e}")
    if worst > 1e-10 or circle_worst > 1e-12:
        print("selftest FAILED", file=sys.stderr)
        return NUMERICAL_ERROR
    print("selftest ok")
    return 0


# ----------------------------------------------------------------- plumbing


def _write_output(path: Optional[str], emit: Callable[[TextIO], None]) -> int:
    if path in (None, "-"):
        emit(sys.stdout)
        return 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            emit(fh)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", IO_ERROR) from None
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(USAGE_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="nlrouter",
        description=__doc__,
        epilog=ANGLE_GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="protocol success probabilities over a grid", epilog=ANGLE_GRAMMAR, formatter_class=argparse.RawDescriptionHelpFormatter)
    sweep.add_argument("--protocol", choices=PROTOCOLS, help="protocol to sweep (default bm)")
    sweep.add_argument("--phi", help="angle or start:stop:points range (default 0:pi:128)")
    sweep.add_argument("--odb", help="comma list of blockaded optical depths; inf allowed (default inf)")
    sweep.add_argument("--pde", help="comma list of detection efficiencies (default 1)")
    sweep.add_argument("--phi1-ratio", dest="phi1_ratio", help="single-photon detuning phase as a multiple of phi (default 0)")
    sweep.add_argument("--engine", choices=("formula", "simulator", "sim", "both"), help="evaluation engine (default formula)")
    sweep.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    sweep.add_argument("--config", help="JSON file supplying any of the above fields")
    sweep.add_argument("--out", help="output path (default stdout)")
    sweep.set_defaults(func=cmd_sweep)

    circle = sub.add_parser("circle", help="phase-loss circle for given optical depths")
    circle.add_argument("--odb", help="comma list of blockaded optical depths (default 3.5,8)")
    circle.add_argument("--points", type=int, default=101, help="samples per branch (default 101)")
    circle.add_argument("--out", help="output path (default stdout)")
    circle.set_defaults(func=cmd_circle)

    opt = sub.add_parser("opt-phase", help="optimal phase versus optical depth")
    opt.add_argument("--protocol", choices=tuple(_ANALYTIC_NAME), help="protocol (default bm)")
    opt.add_argument("--odb", help="comma list or log-spaced start:stop:points (default 60:2000:20)")
    opt.add_argument("--pde", help="detection efficiency (default 1)")
    opt.add_argument("--out", help="output path (default stdout)")
    opt.set_defaults(func=cmd_opt_phase)

    selftest = sub.add_parser("selftest", help="quick engine cross-check")
    selftest.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"nlrouter: error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"nlrouter: numerical error: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
