import pytest

from dimsheet.codegen import compile_workbook
from dimsheet.examples import acme_model_path, example_path
from dimsheet.interface import parse_reports
from dimsheet.interpreter import interpret_workbook
from dimsheet.oracle import evaluate_model
from dimsheet.parser import load_model_file


@pytest.fixture(scope="session")
def acme():
    return load_model_file(acme_model_path())


@pytest.fixture(scope="session")
def acme_reports():
    return parse_reports((example_path() / "reports.txt").read_text())


@pytest.fixture(scope="session")
def acme_wb(acme, acme_reports):
    return compile_workbook(acme, acme_reports)


@pytest.fixture(scope="session")
def acme_interp(acme_wb):
    return interpret_workbook(acme_wb)


@pytest.fixture(scope="session")
def acme_store(acme):
    return evaluate_model(acme)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, text: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
