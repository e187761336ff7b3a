"""Command-line entry point: ``ewfs tables|classify|nogo|fr|compile``.

Exit codes: 0 when the run reproduces the expected result (or there is no
expectation, e.g. for user files), 2 for unreadable or invalid input,
3 for a verdict that differs from the expected one, 4 for a numeric
tolerance breach.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .contextuality import (
    HierarchyLevel, ScenarioTooLarge, SnapError, classification_report, snap,
)
from .empirical import (
    DEFAULT_EPS, EmpiricalModel, ModelError, PossibilisticModel, canonical_ghz_mermin,
    canonical_hardy, model_from_bell, model_from_protocol, possibilistic,
)
from .io import (
    BELL_FORMAT, MODEL_FORMAT, PROTOCOL_FORMAT, FormatError, Report, bell_to_json, digest,
    dumps, load_file, model_file_json, protocol_to_json,
)
from .qsim import SimulationError
from .reasoning import (
    NOGO_VARIANTS, Equality, ForbiddenSet, Parity, ReasoningError, Statement, _var, fr_chain,
    gf2_sum, machine_form, modified_fr, render_constraint, render_equality,
    render_resolution_statements,
)
from .scenario import (
    CANONICAL_BELL, CANONICAL_PROTOCOLS, FAIL, GHZ_BELL_CONTEXTS, GHZ_CONTEXT_NAMES, GHZ_CONTEXTS,
    GHZ_FR_TO_MERMIN, HARDY_CONTEXTS, OK, BellScenario, ScenarioError, compile_bell_to_ewfs,
    compiled_deviation, fr_protocol, ghz_fr_protocol,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_MISMATCH = 3
EXIT_TOLERANCE = 4

REPORT_DIR_ENV = "EWFS_REPORT_DIR"
DEVIATION_TOL = 1e-12
FR_POSTSELECT = Fraction(1, 12)

EXPECTED_LEVELS = {
    "hardy": HierarchyLevel.LOGICAL,
    "ghz": HierarchyLevel.STRONG,
    "chsh": HierarchyLevel.PROBABILISTIC,
    "product": HierarchyLevel.NONCONTEXTUAL,
}
INPUT_ERRORS = (FormatError, ScenarioError, ModelError, ReasoningError, SimulationError,
                SnapError, ScenarioTooLarge, KeyError)


class Result:
    """Payload, human text and exit code of one command run."""

    def __init__(self, payload: dict, lines: list[str], code: int = EXIT_OK, inputs: dict | None = None):
        self.payload = payload
        self.lines = lines
        self.code = code
        self.inputs = inputs or {}


def _file_inputs(path: str) -> dict:
    data = Path(path).read_bytes() if Path(path).is_file() else b""
    return {"file_sha256": hashlib.sha256(data).hexdigest()}


# ---------------------------------------------------------------- models

def hardy_model() -> EmpiricalModel:
    return model_from_protocol(fr_protocol(), HARDY_CONTEXTS)


def ghz_model() -> EmpiricalModel:
    """GHZ-FR statistics with measurements named as in the GHZ-Mermin table."""
    return model_from_protocol(ghz_fr_protocol(), GHZ_CONTEXTS).rename(GHZ_FR_TO_MERMIN, GHZ_BELL_CONTEXTS)


def _model_from_loaded(fmt, obj):
    if fmt == MODEL_FORMAT:
        return obj
    if fmt == BELL_FORMAT:
        return model_from_bell(obj)
    proto, contexts = obj
    if not contexts:
        raise FormatError("protocol file declares no contexts")
    return model_from_protocol(proto, contexts)


def _named_model(name: str):
    if name == "hardy":
        return hardy_model()
    if name == "ghz":
        return ghz_model()
    if name in CANONICAL_BELL:
        return model_from_bell(CANONICAL_BELL[name]())
    fmt, obj = load_file(name)
    return _model_from_loaded(fmt, obj)


# ---------------------------------------------------------------- tables

def _cell_text(v, probabilities: bool) -> str:
    if not probabilities:
        return str(v)
    try:
        return str(snap(v))
    except SnapError:
        return repr(float(v))


def render_table(model, row_labels=None, probabilities=False) -> list[str]:
    spec = model.spec
    rows = []
    for i, c in enumerate(spec.contexts):
        label = "(" + ", ".join(c) + ")"
        if row_labels:
            label = f"{row_labels[i]} {label}"
        outs = spec.joint_outcomes(c)
        if isinstance(model, EmpiricalModel):
            cells = [_cell_text(model.tables[c][o], probabilities) for o in outs]
        else:
            cells = [str(model.cell(c, o)) for o in outs]
        rows.append((label, ["".join(map(str, o)) for o in outs], cells))
    lw = max(len(r[0]) for r in rows)
    cw = max(max(len(x) for x in r[1] + r[2]) for r in rows)
    out = []
    header = None
    for label, cols, cells in rows:
        h = " " * lw + "  " + " ".join(x.rjust(cw) for x in cols)
        if h != header:
            out.append(h)
            header = h
        out.append(label.ljust(lw) + "  " + " ".join(x.rjust(cw) for x in cells))
    return out


def cmd_tables(args) -> Result:
    model = _named_model(args.model)
    pm = possibilistic(model, args.eps) if isinstance(model, EmpiricalModel) else model
    code = EXIT_OK
    payload: dict = {"model": args.model}
    row_labels = None
    legend = []
    if args.model in ("hardy", "ghz"):
        reference = canonical_hardy() if args.model == "hardy" else canonical_ghz_mermin()
        matches = pm == reference
        payload["matches_reference_table"] = matches
        if not matches:
            code = EXIT_MISMATCH
        if args.model == "hardy":
            legend = ["A, B: Z outcomes 0, 1", "U, W: 0 = ok, 1 = fail"]
        else:
            row_labels = GHZ_CONTEXT_NAMES
            legend = ["outcome 0 = +1 eigenvalue (yes for X), 1 = -1 eigenvalue (no for X)"]
    shown = model if (args.probabilities and isinstance(model, EmpiricalModel)) else pm
    payload["table"] = model_file_json(shown)
    if args.probabilities and isinstance(model, EmpiricalModel):
        payload["fractions"] = {
            ",".join(c): [_cell_text(model.tables[c][o], True) for o in model.spec.joint_outcomes(c)]
            for c in model.spec.contexts}
    title = "probabilities" if shown is model and isinstance(model, EmpiricalModel) else "support"
    lines = [f"{args.model}: {title}"] + render_table(shown, row_labels, shown is model) + legend
    if "matches_reference_table" in payload:
        lines.append("matches reference table: " + ("yes" if payload["matches_reference_table"] else "NO"))
    inputs = {} if args.model in ("hardy", "ghz") or args.model in CANONICAL_BELL else _file_inputs(args.model)
    return Result(payload, lines, code, inputs)


# ---------------------------------------------------------------- classify

def cmd_classify(args) -> Result:
    model = _named_model(args.model)
    if isinstance(model, PossibilisticModel):
        raise FormatError("classification needs probabilities, not a possibilistic table")
    report = classification_report(model, args.eps)
    payload = {"model": args.model, "classification": report.to_json()}
    lines = [f"{args.model}: {report.level.name}",
             f"consistent global assignments: {report.consistent_globals} of {report.total_globals}"]
    if report.witness is not None:
        c, section = report.witness
        sec = ", ".join(f"{m}={section[m]}" for m in c)
        lines.append(f"witness: section {sec} of context ({', '.join(c)}) extends to no global assignment")
    pr = report.probabilistic
    if pr is not None:
        if pr.contextual:
            lines.append("exact rational LP: infeasible, no mixture of global assignments reproduces the model")
        else:
            kind = "exact" if pr.exact else f"within {pr.snap_tol}"
            lines.append(f"exact rational LP: feasible ({kind}); deterministic mixture:")
            for g, w in sorted(pr.weights.items(), key=lambda kv: kv[0].items_):
                lines.append(f"  {w}  {g!r}")
    code = EXIT_OK
    expected = EXPECTED_LEVELS.get(args.model)
    if expected is not None:
        payload["expected_level"] = expected.name
        if report.level != expected:
            code = EXIT_MISMATCH
            lines.append(f"expected {expected.name}")
    inputs = {} if args.model in EXPECTED_LEVELS else _file_inputs(args.model)
    return Result(payload, lines, code, inputs)


# ---------------------------------------------------------------- nogo

def _load_protocol(name: str):
    if name in CANONICAL_PROTOCOLS:
        return CANONICAL_PROTOCOLS[name](), {}
    fmt, obj = load_file(name)
    if fmt != PROTOCOL_FORMAT:
        raise FormatError(f"{name}: expected a protocol file, got {fmt}")
    return obj[0], _file_inputs(name)


def _own(protocol, owner: str) -> list[str]:
    return [m.name for m in protocol.measurements().values() if m.agent == owner]


def _statement_text(protocol, s: Statement) -> str:
    premise = dict(s.condition.premise) if s.condition else None
    text = render_constraint(s.constraint, _own(protocol, s.owner), protocol, premise)
    if s.condition is not None:
        text += f"   [once {s.condition.asker} learns {', '.join(s.condition.gather)}]"
    return text


def certificate_parities(items, assumptions) -> list[Parity] | None:
    """The certificate as parities over solver variables, if it is purely linear."""
    out = []
    for it in items:
        if isinstance(it, Equality):
            out.append(Parity((_var(assumptions, it.left, it.measurement),
                               _var(assumptions, it.right, it.measurement)), 0))
        elif isinstance(it.constraint, Parity):
            out.append(Parity(tuple(_var(assumptions, it.owner, m) for m in it.constraint.vars),
                              it.constraint.rhs))
        else:
            return None
    return out


def cmd_nogo(args) -> Result:
    protocol, inputs = _load_protocol(args.protocol)
    run = NOGO_VARIANTS[args.variant](protocol)
    if protocol.name != "ghz-fr" and args.variant != "practicality":
        expected = None
    else:
        expected = run.expected_sat
    v = run.verdict
    lines = [f"# No-go check: {args.variant} ({protocol.name or args.protocol})", "",
             "Assumptions: " + ", ".join(run.assumptions.names()), "", "## Statements"]
    stmts = []
    for s in run.statements:
        lines.append(f"- K_{s.owner}: {_statement_text(protocol, s)}")
        stmts.append({"owner": s.owner, "notation": _statement_text(protocol, s),
                      "machine": machine_form(s),
                      "condition": None if s.condition is None else {
                          "asker": s.condition.asker, "gather": list(s.condition.gather),
                          "premise": dict(s.condition.premise)},
                      "holders": sorted(s.holders)})
    if run.trace:
        lines += ["", "## Communication"] + [f"- {t}" for t in run.trace]
    lines += ["", f"## Verdict: {v.label}"]
    payload = {
        "variant": args.variant,
        "protocol": protocol.name or args.protocol,
        "assumptions": run.assumptions.names(),
        "statements": stmts,
        "equalities": [render_equality(e) for e in run.equalities],
        "verdict": v.label,
        "active": [machine_form(a) for a in v.active],
    }
    if v.sat:
        model = {k: int(x) for k, x in sorted(v.model.items())}
        payload["model"] = model
        lines.append("Model: " + (", ".join(f"{k}={x}" for k, x in model.items()) or "(no active constraints)"))
    else:
        payload["certificate"] = [machine_form(c) for c in v.certificate]
        lines.append("Certificate (minimal):")
        lines += [f"- {machine_form(c)}" for c in v.certificate]
        pars = certificate_parities(v.certificate, run.assumptions)
        if pars is not None:
            lhs, rhs = gf2_sum(pars)
            payload["gf2_sum"] = {"lhs": list(lhs), "rhs": rhs}
            lines.append(f"GF(2) sum of the certificate: {' ⊕ '.join(lhs) or '0'} = {rhs}")
    if args.variant == "practicality":
        rendered = {}
        for agent in sorted({s.owner for s in run.statements}):
            rs = render_resolution_statements(protocol, agent, [s for s in run.statements if s.owner == agent])
            if rs:
                rendered[agent] = [{"text": r.text, "scope": list(r.scope), "condition": r.condition,
                                    "caveat": r.caveat, "machine": r.machine} for r in rs]
        payload["resolution_statements"] = rendered
        lines += ["", "## Conditional statements"]
        for agent, rs in rendered.items():
            lines += [f"- {r['text']}" for r in rs]
    code = EXIT_OK
    if expected is not None:
        payload["expected_verdict"] = "SAT" if expected else "UNSAT"
        if v.sat != expected:
            code = EXIT_MISMATCH
            lines.append(f"expected {payload['expected_verdict']}")
    return Result(payload, lines, code, inputs)


# ---------------------------------------------------------------- fr

def _outcome(text: str) -> int:
    t = text.strip().lower()
    if t in ("ok", "0"):
        return OK
    if t in ("fail", "1"):
        return FAIL
    raise argparse.ArgumentTypeError(f"outcome must be ok, fail, 0 or 1, not {text!r}")


_OKF = ("ok", "fail")


def cmd_fr(args) -> Result:
    u, w = args.u, args.w
    code = EXIT_OK
    if args.variant == "original":
        chain = fr_chain(u, w, args.eps)
        p = snap(chain.probability)
        parts = [f"u = {_OKF[u]}"]
        for st in chain.steps:
            if st.forced is None:
                parts.append(f"{st.variable.lower()} ∈ {{{', '.join(map(str, st.possible))}}} (not forced)")
            elif st.variable == "W":
                parts.append(f"w = {_OKF[st.forced]}")
            else:
                parts.append(f"{st.variable.lower()} = {st.forced}")
        lines = [f"P(u={_OKF[u]}, w={_OKF[w]}) = {p} ({chain.probability!r})",
                 "chain: " + " ⇒ ".join(parts),
                 f"contradiction with post-selected w = {_OKF[w]}: {'yes' if chain.contradiction else 'no'}",
                 f"verdict: {chain.verdict.label}"]
        payload = {"variant": "original", "u": u, "w": w, "probability": chain.probability,
                   "probability_fraction": str(p),
                   "chain": [{"context": list(s.context), "variable": s.variable, "forced": s.forced,
                              "possible": list(s.possible)} for s in chain.steps],
                   "contradiction": chain.contradiction, "verdict": chain.verdict.label}
        if (u, w) == (OK, OK):
            if abs(chain.probability - float(FR_POSTSELECT)) > DEVIATION_TOL:
                code = EXIT_TOLERANCE
            elif not chain.contradiction:
                code = EXIT_MISMATCH
        return Result(payload, lines, code, {"u": u, "w": w})
    mod = modified_fr(u, w, args.eps)
    proto = fr_protocol()
    lines = ["zero-probability projections:"]
    lines += [f"  {k} : {v:.3g}" for k, v in mod.projections.items()]
    lines.append("statements:")
    for s in mod.statements:
        if isinstance(s.constraint, Parity) and len(s.constraint.vars) == 1:
            continue
        premise = {m: v for m, v in (("U", u), ("W", w)) if m in s.scope and s.owner in ("Ursula", "Wigner")}
        lines.append(f"  {s.owner}: {render_constraint(s.constraint, (), proto, premise)}")
    lines.append(f"combined with u = {_OKF[u]}, w = {_OKF[w]}: {mod.verdict.label}")
    payload = {"variant": "modified", "u": u, "w": w, "projections": mod.projections,
               "statements": [machine_form(s) for s in mod.statements], "verdict": mod.verdict.label}
    if not mod.verdict.sat:
        payload["certificate"] = [machine_form(c) for c in mod.verdict.certificate]
    if (u, w) == (OK, OK):
        if max(mod.projections.values()) >= DEVIATION_TOL:
            code = EXIT_TOLERANCE
        elif mod.verdict.sat:
            code = EXIT_MISMATCH
    return Result(payload, lines, code, {"u": u, "w": w})


# ---------------------------------------------------------------- compile

def _load_bell(name: str) -> tuple[BellScenario, dict]:
    if name in CANONICAL_BELL:
        return CANONICAL_BELL[name](), {}
    fmt, obj = load_file(name)
    if fmt != BELL_FORMAT:
        raise FormatError(f"{name}: expected a Bell scenario file, got {fmt}")
    return obj, _file_inputs(name)


def cmd_compile(args) -> Result:
    bell, inputs = _load_bell(args.scenario)
    proto, mapping = compile_bell_to_ewfs(bell)
    dev = compiled_deviation(bell)
    level = classification_report(model_from_bell(bell), args.eps).level
    contexts = [mapping[c] for c in bell.contexts()]
    doc = protocol_to_json(proto, contexts)
    payload = {"scenario": bell.name or args.scenario, "max_deviation": dev, "level": level.name,
               "contexts": {",".join(k): list(v) for k, v in mapping.items()}}
    lines = [f"compiled {bell.name or args.scenario}: {len(proto.friend_steps)} friends, "
             f"{len(proto.super_steps)} superobservers",
             f"max per-context deviation from direct Bell statistics: {dev:.3g}",
             f"Bell model level: {level.name}"]
    if args.output:
        Path(args.output).write_text(dumps(doc))
        payload["output"] = args.output
        lines.append(f"protocol written to {args.output}")
    else:
        payload["protocol"] = doc
    payload["bell"] = bell_to_json(bell)
    code = EXIT_OK if dev < DEVIATION_TOL else EXIT_TOLERANCE
    return Result(payload, lines, code, inputs)


# ---------------------------------------------------------------- driver

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the JSON report instead of text")
    common.add_argument("--eps", type=float, default=DEFAULT_EPS, help="possibility threshold (default 1e-9)")
    common.add_argument("--seed", type=int, default=None, help="reserved; every computation is deterministic")

    p = argparse.ArgumentParser(
        prog="ewfs", description="Wigner's-friend protocols, contextuality tables and no-go checks.",
        epilog="exit codes: 0 expected result, 2 bad input, 3 verdict mismatch, 4 tolerance breach")
    p.add_argument("--version", action="version", version=f"ewfs {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tables", parents=[common], help="print a support or probability table")
    t.add_argument("model", help="hardy, ghz, chsh, product or a model/Bell/protocol file")
    t.add_argument("--probabilities", action="store_true", help="print probabilities as fractions")
    t.set_defaults(func=cmd_tables)

    c = sub.add_parser("classify", parents=[common], help="place a model in the contextuality hierarchy")
    c.add_argument("model", help="hardy, ghz, chsh, product or a model/Bell/protocol file")
    c.set_defaults(func=cmd_classify)

    n = sub.add_parser("nogo", parents=[common], help="run a no-go derivation")
    n.add_argument("variant", choices=sorted(NOGO_VARIANTS))
    n.add_argument("--protocol", default="ghz-fr", help="ghz-fr, fr or a protocol file")
    n.set_defaults(func=cmd_nogo)

    f = sub.add_parser("fr", parents=[common], help="FR reasoning chain or its classical-agent variant")
    f.add_argument("variant", choices=("original", "modified"))
    f.add_argument("--u", type=_outcome, default=OK, help="post-selected Ursula outcome (ok/fail)")
    f.add_argument("--w", type=_outcome, default=OK, help="post-selected Wigner outcome (ok/fail)")
    f.set_defaults(func=cmd_fr)

    k = sub.add_parser("compile", parents=[common], help="compile a Bell scenario to a friend protocol")
    k.add_argument("scenario", help="hardy, ghz, chsh, product or a Bell scenario file")
    k.add_argument("-o", "--output", help="write the protocol file here")
    k.set_defaults(func=cmd_compile)
    return p


def make_report(argv: list[str], args, result: Result) -> Report:
    inputs = {"command": args.command, "eps": args.eps, **result.inputs}
    return Report(tuple(argv), digest(inputs), result.payload, __version__)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        result = args.func(args)
    except INPUT_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_PARSE
    report = make_report(argv, args, result)
    text = dumps(report.to_json())
    if args.json:
        sys.stdout.write(text)
    else:
        print("\n".join(result.lines))
    out_dir = os.environ.get(REPORT_DIR_ENV)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / f"{args.command}-{report.inputs_digest[:12]}.json").write_text(text)
    return result.code


if __name__ == "__main__":
    sys.exit(main())
