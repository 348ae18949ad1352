from __future__ import annotations

import pytest

from msmrsched.model import JobSet, Pipeline, make_jobset

EXAMPLE1_PROC = [(5, 7, 15), (7, 9, 17), (6, 8, 30), (2, 4, 3)]


def example1(deadlines=(1000, 1000, 1000, 1000), mapping=None) -> JobSet:
    return make_jobset(EXAMPLE1_PROC, list(deadlines), mapping=mapping)


def dmr_instance() -> JobSet:
    """Two jobs sharing the first and last stage resources, different servers."""
    pipe = Pipeline((("a",), ("b", "c"), ("d",)))
    return make_jobset([(10, 1, 10), (1, 20, 1)], [35, 45],
                       mapping=[("a", "b", "d"), ("a", "c", "d")], pipeline=pipe)


# Observation-4 witness mapping: J1 and J4 share nothing, J3/J4 meet at the
# first stage and J2/J3 at the second.
FIG2A_MAPPING = [("a", "a", "a"), ("b", "a", "a"), ("b", "a", "b"), ("b", "b", "b")]


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def dmr_js():
    return dmr_instance()


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
