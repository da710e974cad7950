import pytest

from treedyn.constructions import build_measure_family, grigorchuk
from treedyn.measures import OmegaWord, bernoulli, haar


def gri_act(name, w):
    """Independent recursive definition of the Grigorchuk generators on
    finite 0/1 words."""
    if not w:
        return ()
    x, rest = w[0], tuple(w[1:])
    if name == "a":
        return (1 - x,) + rest
    if name == "e":
        return tuple(w)
    below = {"b": ("e", "d"), "c": ("a", "b"), "d": ("a", "c")}[name]
    return (x,) + gri_act(below[x], rest)


def gri_word(word, w):
    # rightmost letter acts first
    for name in reversed(word):
        w = gri_act(name, w)
    return w


@pytest.fixture(scope="session")
def G():
    return grigorchuk()


@pytest.fixture(scope="session")
def H():
    return haar()


@pytest.fixture(scope="session")
def B():
    return bernoulli("2/3", "1/3")


@pytest.fixture(scope="session")
def family(G):
    return build_measure_family(G)


@pytest.fixture(scope="session")
def lam0(family):
    return family.measure(OmegaWord((), 0))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
