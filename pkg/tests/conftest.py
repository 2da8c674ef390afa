from __future__ import annotations

import numpy as np
import pytest

from tqsg import codes
from tqsg.gf2 import BinaryMatrix


def rep(n: int, cyclic: bool = False) -> codes.ClassicalCode:
    return codes.repetition_code(n, cyclic=cyclic)


@pytest.fixture(scope="session")
def five_qubit():
    """HGP of the 2-bit repetition code with itself: N = 5, k = 1, d = 2."""
    return codes.hypergraph_product(rep(2), rep(2))


@pytest.fixture(scope="session")
def toric4():
    c = rep(4, cyclic=True)
    return codes.hypergraph_product(c, c)


@pytest.fixture(scope="session")
def hamming_hgp():
    h = codes.hamming_code(3)
    return codes.hypergraph_product(h, h)


@pytest.fixture(scope="session")
def toy8():
    """Redundancy-free n = 8 code: HGP of [1 1] with the 3-bit repetition chain."""
    a = codes.ClassicalCode(BinaryMatrix.from_rows([[0, 1]], 2))
    return codes.hypergraph_product(a, rep(3))


@pytest.fixture(scope="session")
def pruned_hgp_small():
    """Redundancy-free HGP of a pruned (30, 2, 3) Gallager draw, N = 30² + 19² = 1261."""
    cc = codes.remove_redundant_rows(codes.sample_gallager(codes.GallagerParams(30, 2, 3, 1)))
    return codes.hypergraph_product(cc, cc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria register one line each; printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}")
