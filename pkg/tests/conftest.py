import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from itdopf.problems import bundled_case, solve_opfitd  # noqa: E402

FORMS = ("acp-acpu", "acr-acru", "ivr-ivru", "nfa-nfau")
AC_FORMS = FORMS[:3]


@pytest.fixture(scope="session")
def case5():
    return bundled_case("case5_ieee4")


@pytest.fixture(scope="session")
def case118():
    return bundled_case("case118_ieee4x5")


_solved = {}


def solved(case, form):
    """Memoized OPF solve shared across test modules."""
    key = (case.name, form)
    if key not in _solved:
        _solved[key] = solve_opfitd(case, form)
    return _solved[key]
