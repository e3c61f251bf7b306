import numpy as np
import pytest

from qorrel.tensor import DensityMatrix


def random_state(n: int, seed, rank: int | None = None) -> DensityMatrix:
    rng = np.random.default_rng(seed)
    dim = 3**n
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix.from_array(rho / np.trace(rho).real, n)


def product_mixture(n: int, seed, terms: int = 3) -> DensityMatrix:
    """Random convex mixture of product states."""
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(terms))
    out = np.zeros((3**n, 3**n), dtype=complex)
    for w in weights:
        factor = np.ones((1, 1))
        for _ in range(n):
            factor = np.kron(factor, random_state(1, rng).data)
        out += w * factor
    return DensityMatrix.from_array(out, n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def brute_partial_trace(a: np.ndarray, keep, n: int) -> np.ndarray:
    """Partial trace by explicit index enumeration."""
    keep = sorted(keep)
    traced = [s for s in range(1, n + 1) if s not in keep]
    dk = 3 ** len(keep)
    out = np.zeros((dk, dk), dtype=complex)

    def digits(idx):
        return [(idx // 3 ** (n - 1 - k)) % 3 for k in range(n)]

    for i in range(3**n):
        di = digits(i)
        for j in range(3**n):
            dj = digits(j)
            if any(di[s - 1] != dj[s - 1] for s in traced):
                continue
            r = c = 0
            for s in keep:
                r = 3 * r + di[s - 1]
                c = 3 * c + dj[s - 1]
            out[r, c] += a[i, j]
    return out


# criterion number -> (passed, detail); filled by test_acceptance and printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
