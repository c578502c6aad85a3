"""Shared session fixtures and the acceptance-criterion summary hook.

test_acceptance.py records one line per criterion through the `criterion`
fixture; pytest_terminal_summary prints them after the normal test report so
a plain `pytest` run always shows the per-criterion verdicts.
"""

import contextlib

import numpy as np
import pytest

_CRITERION_LINES: dict[int, tuple[bool, str]] = {}


class CriterionRecorder:
    """Accumulates pass/fail clauses for one acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.clauses: list[tuple[bool, str]] = []

    def expect(self, ok: bool, detail: str) -> None:
        self.clauses.append((bool(ok), detail))

    @property
    def passed(self) -> bool:
        return bool(self.clauses) and all(ok for ok, _ in self.clauses)

    def summary(self) -> str:
        if not self.clauses:
            return "no clauses recorded"
        return "; ".join(("" if ok else "[FAILED] ") + d for ok, d in self.clauses)


@pytest.fixture
def criterion():
    """Context manager recording one criterion's verdict for the summary.

    Records a FAIL line even when the computation inside the block raises, so
    the printed checklist always covers every criterion that ran.
    """

    @contextlib.contextmanager
    def _open(number: int, title: str):
        rec = CriterionRecorder(number, title)
        try:
            yield rec
        except BaseException:
            _CRITERION_LINES[number] = (False, f"{title}: error before completion")
            raise
        _CRITERION_LINES[number] = (rec.passed, f"{title}: {rec.summary()}")
        assert rec.passed, f"criterion {number} failed: {rec.summary()}"

    return _open


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERION_LINES):
        ok, detail = _CRITERION_LINES[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")


# -- expensive measurements shared between module tests and acceptance -------


@pytest.fixture(scope="session")
def parametrix_j3_remainder():
    """Normalized parametrix remainder, polynomial damping, j_max = 3."""
    from torusdamp.profiles import polynomial_profile
    from torusdamp.weyl import parametrix_composition_check

    return parametrix_composition_check(
        polynomial_profile(1.0, 2),
        [2.0**-4, 2.0**-5, 2.0**-6, 2.0**-7],
        0.875,
        2,
        0.5,
        3,
    )


@pytest.fixture(scope="session")
def strip_exponent_fit():
    """Torus resolvent growth fit for the sharp strip on a tuned q ladder."""
    from torusdamp.profiles import strip_constant_profile
    from torusdamp.resolvent import fit_resolvent_exponent, resonance_tuned_frequencies

    profile = strip_constant_profile(1.0)
    qs = resonance_tuned_frequencies(profile, np.geomspace(100.0, 10000.0, 8).tolist())
    return fit_resolvent_exponent(profile, qs, beta_strategy="modes")
