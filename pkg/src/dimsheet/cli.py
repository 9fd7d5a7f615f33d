"""Command-line front end.

Exit status: 0 success, 1 model diagnostics with errors, 2 verification
failure, 3 I/O or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analyzer import check_model, impact_of_member_change
from .codegen import CodegenError, compile_workbook
from .diagnostics import ModelError
from .formula_view import FormulaViewError, parse_formula_view, render_formula_view
from .interface import REPORT_FILE, ReportError, default_reports, parse_reports
from .interpreter import interpret_workbook
from .oracle import evaluate_model
from .parser import load_model_file
from .verify import DEFAULT_TOLERANCE, cross_check

OK, DIAGNOSTICS, VERIFY_FAILED, USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"cannot read model file {path}")
    try:
        return load_model_file(p)
    except ModelError as exc:
        missing = [d for d in exc.diagnostics if d.code == "missing-table"]
        if missing:
            raise UsageError(missing[0].message) from None
        raise


def _summary(diags) -> str:
    errors = sum(d.is_error for d in diags)
    return f"{errors} errors, {len(diags) - errors} warnings"


def _reports(model_path: str, report_path: str | None, model):
    if report_path:
        p = Path(report_path)
    else:
        p = Path(model_path).parent / REPORT_FILE
        if not p.is_file():
            return default_reports(model)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read report config {p}: {exc.strerror}") from None
    return parse_reports(text, str(p))


def cmd_check(args) -> int:
    model = _load(args.model)
    diags = check_model(model)
    if args.json:
        print(json.dumps({"diagnostics": [d.to_json() for d in diags], "summary": _summary(diags)}, indent=2))
    else:
        for d in diags:
            print(d)
        print(_summary(diags))
    return DIAGNOSTICS if any(d.is_error for d in diags) else OK


def cmd_compile(args) -> int:
    model = _load(args.model)
    for d in model.warnings:
        print(d, file=sys.stderr)
    reports = _reports(args.model, args.report, model)
    wb = compile_workbook(model, reports)
    interp = interpret_workbook(wb)
    report = cross_check(model, wb, args.tol, interpreter=interp)
    if not report.passed:
        print(report.to_text(), file=sys.stderr)
        if not args.force:
            print("verification failed; nothing written (use --force to write anyway)", file=sys.stderr)
            return VERIFY_FAILED
    try:
        if args.formula_view:
            Path(args.formula_view).write_text(render_formula_view(wb), encoding="utf-8")
        if args.output:
            from .xlsx import write_xlsx

            write_xlsx(wb, args.output, interp)
    except OSError as exc:
        raise UsageError(f"cannot write output: {exc}") from None
    print(f"{len(wb.sheets)} sheets, {len(wb.names)} names, {report.compared} values verified")
    return OK if report.passed else VERIFY_FAILED


def cmd_eval(args) -> int:
    model = _load(args.model)
    store = evaluate_model(model)
    names = [args.var] if args.var else [v.name for v in model.variables]
    for name in names:
        if not model.has_variable(name):
            raise UsageError(f"unknown variable [{name}]")
    for name in names:
        name = model.variable(name).name
        if args.csv:
            sys.stdout.write(store.to_csv(model, name))
            continue
        values = store.values(name)
        if len(values) == 1 and () in values:
            print(f"{name}\t{values[()]!r}" if not args.var else repr(values[()]))
        else:
            for t, x in values.items():
                print(f"{name}\t{'-'.join(t)}\t{x!r}")
    return OK


def cmd_verify(args) -> int:
    model = _load(args.model)
    if args.formula_view:
        try:
            text = Path(args.formula_view).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read formula view: {exc.strerror}") from None
        wb = parse_formula_view(text, model)
    else:
        wb = compile_workbook(model, _reports(args.model, args.report, model))
    report = cross_check(model, wb, args.tol)
    print(report.dumps() if args.json else report.to_text())
    return OK if report.passed else VERIFY_FAILED


def cmd_impact(args) -> int:
    model = _load(args.model)
    try:
        dim = model.dimension(args.dimension)
    except KeyError:
        raise UsageError(f"unknown dimension {args.dimension!r}") from None
    if args.remove is not None:
        if args.remove not in dim.codes:
            raise UsageError(f"{args.remove!r} is not a member of {dim.name}")
        count = len(dim) - 1
    else:
        count = len(dim) + args.add
    try:
        report = impact_of_member_change(model, dim.name, count)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(report.dumps() if args.json else report.to_text())
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dimsheet", description="Compile dimensional models into structured spreadsheets.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="parse and analyze a model")
    p.add_argument("model")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compile", help="generate the workbook")
    p.add_argument("model")
    p.add_argument("-o", "--output", help="XLSX file to write")
    p.add_argument("--formula-view", help="also write the formula view to this file")
    p.add_argument("--report", help=f"interface report config (default: {REPORT_FILE} next to the model)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--force", action="store_true", help="write even if verification fails")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", help="evaluate the model directly")
    p.add_argument("model")
    p.add_argument("--var")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="cross-check the workbook against the model")
    p.add_argument("model")
    p.add_argument("--formula-view", help="verify this formula view instead of a fresh compile")
    p.add_argument("--report")
    p.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("impact", help="sheets affected by changing a dimension's members")
    p.add_argument("model")
    p.add_argument("--dimension", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--add", type=int)
    group.add_argument("--remove", metavar="CODE")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_impact)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        print(_summary(exc.diagnostics), file=sys.stderr)
        return DIAGNOSTICS
    except (UsageError, ReportError, FormulaViewError) as exc:
        print(f"dimsheet: {exc}", file=sys.stderr)
        return USAGE
    except CodegenError as exc:
        print(f"dimsheet: {exc}", file=sys.stderr)
        return DIAGNOSTICS


if __name__ == "__main__":
    sys.exit(main())
