"""Command-line front end: ``qindep <command> [options]``.

Exit codes: 0 ok, 1 usage/input error, 2 undecided or precision exhausted,
3 a hypothesis check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Sequence

from .errors import (
    AmbiguousEnclosure,
    PrecisionExhausted,
    QIndepError,
    ThresholdNotReached,
    Undecidable,
    UsageError,
)
from .numberfield import (
    embeddings,
    field_create,
    is_algebraic_integer,
    minimal_polynomial,
    norm_exact,
    parse_element,
    pv_check,
    q_height,
    trace_exact,
)
from .numerics import DEFAULT_PREC, MIN_PREC, ComplexBall, RealBall
from .polynomials import parse_poly, poly_str
from .proofkit import (
    DichotomyReport,
    ProgressionSetup,
    classify_norms,
    compute_xn_thm2,
    elimination_terms,
    limit_check_thm1,
    parse_lambda,
    traces_thm1,
)
from .qseries import KINDS, SeriesSpec, evaluate, field_from_text, parse_argument
from .relations import load_values_spec, query_from_sources, find_relation
from .theorems import (
    check_cor_irrational,
    check_cor_q_exp,
    check_thm1,
    check_thm2,
    normalize_theorem_id,
)
from .proofkit import _split_top

SCHEMA = 1
COMMANDS = ("field", "eval", "height", "check", "xn-trace", "eliminate", "relations")
EXIT_OK, EXIT_USAGE, EXIT_UNDECIDED, EXIT_FAIL = 0, 1, 2, 3

LAMBDA_HELP = (
    "relation coefficients: 'lambda0;row1;row2...' where row k lists lambda_{0,k},lambda_{1,k},... "
    "(comma separated); entries are rationals or power-basis vectors like [1,0]. "
    "Progression theorem: 'lambda0;lambda1;...;lambdak'"
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    prec: int
    output: str
    params: tuple[tuple[str, Any], ...]

    def get(self, key: str, default=None):
        return dict(self.params).get(key, default)

    def inputs(self) -> dict:
        return {"prec": self.prec, "output": self.output, **dict(self.params)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_prec() -> int:
    env = os.environ.get("QINDEP_DEFAULT_PREC")
    if env is None:
        return DEFAULT_PREC
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QINDEP_DEFAULT_PREC={env!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--prec", type=int, default=None,
                        help="target precision in bits (default: $QINDEP_DEFAULT_PREC or 128)")
    common.add_argument("--output", choices=("text", "json"), default="text")
    common.add_argument("--config", default=None,
                        help="JSON file with the same shape as a report's 'inputs' block")

    p = _Parser(prog="qindep", description="Certified q-series values and independence checks.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("field", parents=[common], help="build Q(q) and certify its roots")
    s.add_argument("--poly", required=False, help="minimal polynomial, e.g. 'x^2-x-1'")
    s.add_argument("--root", default="max_real", help="'max_real' or a 1-based root index")

    def field_opts(s, q_default="2"):
        s.add_argument("--q", default=q_default, help="integer/rational q or a polynomial in x")
        s.add_argument("--root", default="max_real", help="'max_real' or a 1-based root index")

    s = sub.add_parser("eval", parents=[common], help="evaluate a q-series with a tail bound")
    s.add_argument("--fn", required=False, help="one of: " + ", ".join(k.lower() for k in KINDS))
    field_opts(s)
    s.add_argument("--x", default="1", help="argument: rational, [c0,c1,...], or a+bj")
    s.add_argument("--poly-p", default=None, help="P for eqp")
    s.add_argument("--m", type=int, default=1, help="progression modulus for eqm")
    s.add_argument("--j", type=int, default=0, help="derivative order")
    s.add_argument("--mode", choices=("numeric", "exact"), default="numeric")

    s = sub.add_parser("height", parents=[common], help="q-relative height and embeddings")
    field_opts(s)
    s.add_argument("--alpha", required=False)

    s = sub.add_parser("check", parents=[common], help="certify a theorem's hypotheses")
    s.add_argument("--theorem", required=False, help="thm1, cor1_2, cor1_3, cor1_5 or thm1_6")
    field_opts(s)
    s.add_argument("--poly-p", default="x-1")
    s.add_argument("--alphas", default=None, help="list such as '[1,-1]' or '[[0,1],2]'")
    s.add_argument("--alpha", default=None)
    s.add_argument("--max-deriv", type=int, default=0, help="top derivative order M")
    s.add_argument("--a", default=None, help="progression moduli, e.g. '1,2'")

    s = sub.add_parser("xn-trace", parents=[common], help="exact X_N, norms and bound ratios")
    s.add_argument("--theorem", default="1", help="'1' (polynomial denominators) or '1_6' (progressions)")
    field_opts(s)
    s.add_argument("--poly-p", default="x-1")
    s.add_argument("--alphas", default="[1]")
    s.add_argument("--alpha", default="1")
    s.add_argument("--a", default="1,2")
    s.add_argument("--lambda", dest="lambda_", default=None, help=LAMBDA_HELP)
    s.add_argument("--n", default=None, help="'a..b', a list 'a,b,c' or one N (default 1..30 / 1..12)")

    s = sub.add_parser("eliminate", parents=[common], help="terms of the progression elimination relation")
    field_opts(s, "3")
    s.add_argument("--alpha", default="2")
    s.add_argument("--a", default="1,2")
    s.add_argument("--lambda", dest="lambda_", default=None, help=LAMBDA_HELP + " (default 0;1;...;1)")
    s.add_argument("--n", default="5")

    s = sub.add_parser("relations", parents=[common], help="integer-relation search by LLL")
    s.add_argument("--values-spec", required=False, help="JSON file listing the values")
    s.add_argument("--max-height", type=int, default=10 ** 8)
    return p


_REQUIRED = {"field": "poly", "eval": "fn", "height": "alpha", "check": "theorem",
             "xn-trace": "lambda", "relations": "values_spec"}
_GLOBAL = ("prec", "output", "config", "command")


def _argv_from_inputs(command: str, inputs: dict) -> list[str]:
    argv = [command]
    for key, val in inputs.items():
        if val is None or key == "command":
            continue
        argv.append(f"--{key.replace('_', '-')}={val}")
    return argv


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError("config must be a JSON object")
    return obj


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "--config":
        if len(argv) < 2:
            raise UsageError("--config needs a file")
        obj = _load_config(argv[1])
        inputs = obj.get("inputs", obj)
        command = obj.get("command", inputs.get("command"))
        if command is None:
            raise UsageError("config file names no command")
        return parse_args(_argv_from_inputs(command, inputs) + argv[2:])
    ns = build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("choose a command: " + ", ".join(COMMANDS))
    if ns.config:
        obj = _load_config(ns.config)
        inputs = obj.get("inputs", obj)
        explicit = [a for a in argv[1:]]
        rest = []
        skip = False
        for a in explicit:
            if skip:
                skip = False
                continue
            if a == "--config":
                skip = True
                continue
            rest.append(a)
        return parse_args(_argv_from_inputs(ns.command, inputs) + rest)
    params = {k: v for k, v in vars(ns).items() if k not in _GLOBAL}
    if "lambda_" in params:
        params["lambda"] = params.pop("lambda_")
    need = _REQUIRED.get(ns.command)
    if need and params.get(need) is None:
        raise UsageError(f"{ns.command}: --{need.replace('_', '-')} is required")
    prec = ns.prec if ns.prec is not None else _default_prec()
    if prec < MIN_PREC:
        raise UsageError(f"precision must be at least {MIN_PREC} bits, got {prec}")
    _resolve_defaults(ns.command, params)
    return RunConfig(ns.command, prec, ns.output, tuple(sorted(params.items())))


def _resolve_defaults(command: str, params: dict) -> None:
    if command == "xn-trace" and params.get("n") is None:
        thm = _trace_theorem(params["theorem"])
        params["n"] = "1..30" if thm == "1" else "1..12"
    if command == "eliminate" and params.get("lambda") is None:
        k = len(_int_list(params["a"]))
        params["lambda"] = "0" + ";1" * k
    if command == "check":
        thm = normalize_theorem_id(params["theorem"])
        if thm in ("Thm1", "Cor1_2") and params.get("alphas") is None:
            params["alphas"] = f"[{params['alpha']}]" if params.get("alpha") is not None else None
            params["alpha"] = None
            if params["alphas"] is None:
                raise UsageError("check: --alphas is required for this theorem")
        if thm in ("Cor1_3", "Cor1_5", "Thm1_6") and params.get("alpha") is None:
            raise UsageError("check: --alpha is required for this theorem")
        if thm == "Thm1_6" and params.get("a") is None:
            raise UsageError("check: --a is required for thm1_6")


def _trace_theorem(text: str) -> str:
    key = str(text).lower().replace(".", "_").replace("thm", "")
    if key in ("1", "1_1", "11"):
        return "1"
    if key in ("1_6", "16", "2"):
        return "1_6"
    raise UsageError(f"xn-trace: unknown theorem {text!r}; use 1 or 1_6")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).replace("(", "").replace(")", "").split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _n_values(text: str) -> list[int]:
    s = str(text).replace(" ", "")
    try:
        if ".." in s:
            lo, hi = s.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in s.split(",") if x]
    except ValueError:
        raise UsageError(f"cannot parse N range {text!r}") from None


def _element_list(F, text: str):
    s = str(text).strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise UsageError(f"alphas must be a bracketed list, got {text!r}")
    items = [x for x in _split_top(s[1:-1], ",") if x]
    if not items:
        raise UsageError("alphas list is empty")
    return [parse_element(F, x) for x in items]


def _poly(text: str) -> list[int]:
    c = parse_poly(text)
    if any(Fraction(x).denominator != 1 for x in c):
        raise UsageError(f"polynomial {text!r} must have integer coefficients")
    return [int(x) for x in c]


# -- commands -----------------------------------------------------------------


def _cmd_field(cfg: RunConfig) -> tuple[int, dict]:
    F = field_create(_poly(cfg.get("poly")), cfg.get("root").replace("-", "_"), cfg.prec)
    res = {**F.describe(), "roots": [z.to_json() for z in F.roots]}
    try:
        res["pv"] = pv_check(F, cfg.prec).to_json()
        code = EXIT_OK
    except Undecidable as exc:
        res["pv"] = {"status": "undecided", "reason": str(exc)}
        code = EXIT_UNDECIDED
    return code, res


def _field(cfg: RunConfig):
    return field_from_text(cfg.get("q"), str(cfg.get("root")).replace("-", "_"), cfg.prec)


def _cmd_eval(cfg: RunConfig) -> tuple[int, dict]:
    F = _field(cfg)
    P = _poly(cfg.get("poly_p")) if cfg.get("poly_p") else None
    spec = SeriesSpec(cfg.get("fn"), F, parse_argument(F, cfg.get("x")), P, cfg.get("m"), cfg.get("j"))
    r = evaluate(spec, cfg.prec, mode=cfg.get("mode"))
    tail = RealBall.from_endpoints(r.tail, r.tail, cfg.prec) if r.tail else RealBall.from_value(0, cfg.prec)
    return EXIT_OK, {
        "function": spec.kind,
        "value": r.value.to_json(),
        "terms": r.terms,
        "tail_bound": tail.to_json(),
        "working_precision": r.work_prec,
        "series": spec.to_record(),
    }


def _cmd_height(cfg: RunConfig) -> tuple[int, dict]:
    F = _field(cfg)
    a = parse_element(F, cfg.get("alpha"))
    return EXIT_OK, {
        "alpha": str(a),
        "height": q_height(a, cfg.prec).to_json(),
        "embeddings": [z.to_json() for z in embeddings(a, cfg.prec)],
        "norm": str(norm_exact(a)),
        "trace": str(trace_exact(a)),
        "minimal_polynomial": poly_str(minimal_polynomial(a)),
        "algebraic_integer": is_algebraic_integer(a),
    }


def _cmd_check(cfg: RunConfig) -> tuple[int, dict]:
    F = _field(cfg)
    thm = normalize_theorem_id(cfg.get("theorem"))
    M = cfg.get("max_deriv")
    if thm == "Thm1":
        v = check_thm1(F, _poly(cfg.get("poly_p")), _element_list(F, cfg.get("alphas")), M, cfg.prec)
    elif thm == "Cor1_2":
        v = check_cor_q_exp(F, _element_list(F, cfg.get("alphas")), M, cfg.prec)
    elif thm in ("Cor1_3", "Cor1_5"):
        v = check_cor_irrational(F, parse_element(F, cfg.get("alpha")), cfg.prec, thm)
    else:
        v = check_thm2(F, parse_element(F, cfg.get("alpha")), _int_list(cfg.get("a")), cfg.prec)
    code = EXIT_OK if v.satisfied else (EXIT_UNDECIDED if v.undecided else EXIT_FAIL)
    return code, v.to_json()


def _cmd_xn_trace(cfg: RunConfig) -> tuple[int, dict]:
    F = _field(cfg)
    coeffs = parse_lambda(F, cfg.get("lambda"))
    Ns = _n_values(cfg.get("n"))
    if _trace_theorem(cfg.get("theorem")) == "1":
        P = _poly(cfg.get("poly_p"))
        alphas = _element_list(F, cfg.get("alphas"))
        traces = traces_thm1(F, P, alphas, coeffs, Ns, cfg.prec)
        rep = DichotomyReport(tuple(traces), classify_norms([t.norm for t in traces]))
        res = rep.to_json()
        if Ns:
            lc = limit_check_thm1(F, P, alphas, coeffs, max(Ns), cfg.prec)
            res["limit_check"] = {
                "N": lc["N"], "partial": lc["partial"].to_json(), "limit": lc["limit"].to_json(),
                "tail_bound": lc["tail"].to_json() if lc["tail"] is not None else None,
                "consistent": lc["consistent"],
            }
        return EXIT_OK, res
    alpha = parse_element(F, cfg.get("alpha"))
    setup = ProgressionSetup(tuple(_int_list(cfg.get("a"))))
    traces = [compute_xn_thm2(F, alpha, setup, coeffs, N, cfg.prec) for N in Ns]
    rep = DichotomyReport(tuple(traces), classify_norms([t.norm for t in traces]))
    res = rep.to_json()
    res["setup"] = {"a": list(setup.a_list), "d": setup.d, "d_i": list(setup.d_i), "delta": setup.delta}
    res["factorial_quotient_identity"] = True
    return EXIT_OK, res


def _cmd_eliminate(cfg: RunConfig) -> tuple[int, dict]:
    F = _field(cfg)
    alpha = parse_element(F, cfg.get("alpha"))
    setup = ProgressionSetup(tuple(_int_list(cfg.get("a"))))
    coeffs = parse_lambda(F, cfg.get("lambda"))
    if coeffs.m != setup.k or any(len(r) != 1 for r in coeffs.lambdas):
        raise UsageError(f"eliminate: --lambda needs lambda0 and {setup.k} single coefficients")
    rows = []
    for N in _n_values(cfg.get("n")):
        terms = elimination_terms(F, alpha, setup, coeffs, N, cfg.prec)
        total = ComplexBall.from_value(0, cfg.prec)
        for t in terms:
            total = total + t.weighted
        lead = next(t for t in terms if t.leading)
        rows.append({
            "N": N,
            "terms": [t.to_json() for t in terms],
            "weighted_sum": total.to_json(),
            "leading_exact": str(lead.exact),
            "all_within_envelope": all(t.within_envelope for t in terms if not t.leading),
        })
    return EXIT_OK, {"setup": {"a": list(setup.a_list), "d": setup.d, "d_i": list(setup.d_i),
                               "delta": setup.delta}, "rows": rows}


def _cmd_relations(cfg: RunConfig) -> tuple[int, dict]:
    path = cfg.get("values_spec")
    try:
        with open(path, encoding="utf-8") as f:
            spec = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read values spec {path!r}: {exc}") from None
    sources, F = load_values_spec(spec, cfg.prec)
    query = query_from_sources(sources, cfg.get("max_height"), cfg.prec, F)
    res = find_relation(query).to_json()
    res["values"] = [v.to_json() for v in query.values]
    res["max_height"] = str(cfg.get("max_height"))
    return EXIT_OK, res


_DISPATCH = {
    "field": _cmd_field, "eval": _cmd_eval, "height": _cmd_height, "check": _cmd_check,
    "xn-trace": _cmd_xn_trace, "eliminate": _cmd_eliminate, "relations": _cmd_relations,
}


def _error_code(exc: BaseException) -> int:
    if isinstance(exc, (Undecidable, PrecisionExhausted, AmbiguousEnclosure, ThresholdNotReached)):
        return EXIT_UNDECIDED
    return EXIT_USAGE


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute a command; returns (exit status, report)."""
    report = {"schema": SCHEMA, "command": cfg.command, "inputs": cfg.inputs(),
              "precision_used": cfg.prec}
    try:
        code, result = _DISPATCH[cfg.command](cfg)
        report["result"] = result
    except (QIndepError, ValueError, ZeroDivisionError) as exc:
        code = _error_code(exc)
        report["result"] = None
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    return code, report


# -- report writing -----------------------------------------------------------


TEXT_DIGITS = 60


def _short(mid: str) -> str:
    # text mode only; the JSON report keeps every digit
    if len(mid) <= TEXT_DIGITS or "e" in mid:
        return mid
    return f"{mid[:TEXT_DIGITS]}...({len(mid) - TEXT_DIGITS} more digits)"


def _fmt_leaf(v) -> str:
    if isinstance(v, dict) and set(v) == {"mid", "rad"}:
        mid = _short(v["mid"])
        return mid if v["rad"] == "0" else f"{mid} +/- {v['rad']}"
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        re, im = _fmt_leaf(v["re"]), _fmt_leaf(v["im"])
        return re if v["im"] == {"mid": "0", "rad": "0"} else f"({re}) + ({im})i"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def _is_leaf(v) -> bool:
    return not isinstance(v, (dict, list)) or (isinstance(v, dict) and set(v) in ({"mid", "rad"}, {"re", "im"}))


def _is_flat(v) -> bool:
    return _is_leaf(v) or (isinstance(v, list) and all(_is_leaf(x) for x in v))


def _cell(v) -> str:
    return ", ".join(_fmt_leaf(x) for x in v) if isinstance(v, list) else _fmt_leaf(v)


def _is_rows(v) -> bool:
    return isinstance(v, list) and bool(v) and all(isinstance(x, dict) and not _is_leaf(x) for x in v)


def _table(rows: list[dict], indent: str) -> list[str]:
    cols = [k for k, v in rows[0].items() if _is_flat(v)]
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    out = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    out += ["  ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip() for row in cells]
    out = [indent + line for line in out]
    for r in rows:
        label = ", ".join(f"{c}={_cell(r[c])}" for c in cols[:1])
        for k, v in r.items():
            if _is_rows(v):
                out.append(f"{indent}{k} ({label}):")
                out += _table(v, indent + "  ")
            elif isinstance(v, dict) and not _is_leaf(v):
                out.append(f"{indent}{k} ({label}):")
                out += _text_lines(v, indent + "  ")
    return out


def _text_lines(obj: dict, indent: str = "") -> list[str]:
    lines = []
    flat = [k for k, v in obj.items() if _is_flat(v)]
    width = max((len(k) for k in flat), default=0)
    for k in flat:
        lines.append(f"{indent}{k.ljust(width)}  {_cell(obj[k])}")
    for k, v in obj.items():
        if k in flat:
            continue
        lines.append(f"{indent}{k}:")
        if isinstance(v, dict):
            lines += _text_lines(v, indent + "  ")
        elif _is_rows(v):
            lines += _table(v, indent + "  ")
        else:
            lines.append(f"{indent}  {_fmt_leaf(v)}")
    return lines


def report_write(report: dict, fmt: str = "json") -> bytes:
    """Serialize a report; JSON output is byte-for-byte deterministic."""
    if fmt == "json":
        return (json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n").encode()
    lines = [f"command    {report['command']}", f"precision  {report['precision_used']}"]
    if report.get("error"):
        lines.append(f"error      {report['error']['type']}: {report['error']['message']}")
    elif isinstance(report.get("result"), dict):
        lines += _text_lines(report["result"])
    return ("\n".join(lines) + "\n").encode()


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    code, report = run(cfg)
    sys.stdout.buffer.write(report_write(report, cfg.output))
    sys.stdout.flush()
    if report.get("error"):
        print(f"{report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
