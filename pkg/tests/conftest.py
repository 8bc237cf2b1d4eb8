import random

import pytest

from formalcr.series import GaussRat, MultiSeries


def random_series(rng, vars, trunc, n_terms=6, max_deg=None, den=10, constant=True):
    max_deg = trunc if max_deg is None else max_deg
    terms = {}
    for _ in range(n_terms):
        d = rng.randint(0 if constant else 1, max_deg)
        e = [0] * len(vars)
        for _ in range(d):
            e[rng.randrange(len(vars))] += 1
        terms[tuple(e)] = GaussRat(_frac(rng, den), _frac(rng, den))
    return MultiSeries(vars, terms, trunc)


def _frac(rng, den):
    from fractions import Fraction
    return Fraction(rng.randint(-den, den), rng.randint(1, den))


@pytest.fixture
def rng():
    return random.Random(20261015)


def random_phi(rng, max_deg=8, den=10, n_terms=5):
    """A valid defining series: real, and every term divisible by z and zb."""
    from formalcr.hypersurface import PHI_VARS, validate_phi
    terms = {}
    for _ in range(n_terms):
        d = rng.randint(2, max_deg)
        a = rng.randint(1, d - 1)
        b = rng.randint(1, d - a)
        c = d - a - b
        coef = GaussRat(_frac(rng, den), _frac(rng, den) if a != b else 0)
        if a == b:
            terms[(a, b, c)] = terms.get((a, b, c), GaussRat(0)) + coef
            continue
        for key, val in (((a, b, c), coef), ((b, a, c), coef.conj())):
            terms[key] = terms.get(key, GaussRat(0)) + val
    return validate_phi(MultiSeries(PHI_VARS, terms, max_deg))


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    from test_acceptance import CRITERIA
    terminalreporter.section("acceptance criteria")
    for name, (num, title) in sorted(CRITERIA.items(), key=lambda kv: kv[1][0]):
        if name not in _acceptance:
            continue
        outcome, secs = _acceptance[name]
        status = "PASS" if outcome == "passed" else "FAIL"
        budget = "" if secs < 10 else " (over the 10 s budget)"
        terminalreporter.write_line(f"criterion {num}: {status} - {title} [{secs:.1f} s]{budget}")
