import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from qorrel.closed_forms import total_correlation
from qorrel.maxent import (
    ConvergenceError,
    LocalBasis,
    SolverConfig,
    expectations,
    local_basis,
    regularize,
    regularized_spectrum,
    solve,
)
from qorrel.states import FamilyParams, diagonal_companion, ghz1, ghz1_pure, sigma_g
from qorrel.tensor import DensityMatrix, embed, herm_exp, partial_trace, von_neumann_entropy

LN3 = np.log(3)
TIGHT = SolverConfig(grad_tol=1e-11)


def ipf(p, n, level, sweeps=2000, tol=1e-13):
    """Classical max-ent distribution with the same ``level``-marginals as ``p``."""
    p = p.reshape((3,) * n)
    q = np.full_like(p, 1.0 / p.size)
    groups = list(itertools.combinations(range(n), level))
    for _ in range(sweeps):
        worst = 0.0
        for g in groups:
            other = tuple(a for a in range(n) if a not in g)
            target = p.sum(axis=other, keepdims=True)
            current = q.sum(axis=other, keepdims=True)
            worst = max(worst, float(np.max(np.abs(target - current))))
            q = q * target / current
        if worst < tol:
            break
    return q.ravel()


def shannon(p):
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


# -- basis ---------------------------------------------------------------------

@pytest.mark.parametrize("n,level,count", [(2, 1, 16), (3, 2, 216), (4, 3, 2464), (3, 3, 728)])
def test_basis_counts(n, level, count):
    assert len(LocalBasis(n, level)) == count == LocalBasis.expected_size(n, level)


@pytest.mark.parametrize("n,level", [(2, 2), (3, 2)])
def test_basis_trace_orthogonal(n, level):
    basis = local_basis(n, level)
    mats = np.array([embed(t, n) for t in basis.terms]).reshape(len(basis), -1)
    gram = (mats.conj() @ mats.T).real
    assert np.max(np.abs(gram - np.diag(basis.norms))) <= 1e-10
    assert max(len(t.support) for t in basis.terms) == level
    for t in basis.terms:
        assert abs(np.trace(t.data)) <= 1e-12


def test_basis_level_range():
    with pytest.raises(ValueError):
        LocalBasis(3, 0)
    with pytest.raises(ValueError):
        LocalBasis(3, 4)


def test_operator_round_trip():
    basis = local_basis(3, 2)
    rng = np.random.default_rng(0)
    coeffs = rng.standard_normal(len(basis))
    op = basis.operator(coeffs)
    assert np.allclose(basis.expectations(op) / basis.norms, coeffs, atol=1e-12)


# -- moment map ------------------------------------------------------------------

def test_expectations_match_explicit_traces():
    rho = random_state(3, 4)
    basis = local_basis(3, 2)
    brute = np.array([np.trace(rho.data @ embed(t, 3)).real for t in basis.terms])
    assert np.max(np.abs(expectations(rho, basis) - brute)) <= 1e-12


def test_expectations_examples():
    basis = local_basis(3, 2)
    assert np.max(np.abs(expectations(np.eye(27) / 27, basis))) <= 1e-15
    zero = np.zeros((27, 27))
    zero[0, 0] = 1.0
    t = expectations(zero, basis)
    # Z = (lambda3 + sqrt3 lambda8) / 2 on site 1
    l3 = basis.labels.index(((1,), (3,)))
    l8 = basis.labels.index(((1,), (8,)))
    assert (t[l3] + np.sqrt(3) * t[l8]) / 2 == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        expectations(np.eye(9) / 9, basis)


@pytest.mark.parametrize("n", [3, 4])
def test_expectations_equal_for_equal_marginals(n):
    c = np.full((3, 3), 0.25, dtype=complex) + np.eye(3) / 12
    c[0, 1], c[1, 0] = 0.25 + 0.05j, 0.25 - 0.05j
    p = FamilyParams(n=n, c=c)
    basis = local_basis(n, n - 1)
    a = expectations(ghz1(p), basis)
    b = expectations(diagonal_companion("ghz1", p), basis)
    assert np.max(np.abs(a - b)) <= 1e-12


# -- solver ----------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(epsilon_schedule=(1e-3, 1e-2))
    with pytest.raises(ValueError):
        SolverConfig(epsilon_schedule=(1.5,))
    with pytest.raises(ValueError):
        SolverConfig(grad_tol=0.0)


def test_solve_level_one_is_product_of_marginals():
    rho = random_state(3, 9)
    res = solve(rho, 1)
    prod = np.kron(np.kron(partial_trace(rho, [1]).data, partial_trace(rho, [2]).data),
                   partial_trace(rho, [3]).data)
    assert np.max(np.abs(res.sigma.data - prod)) <= 1e-7
    assert res.residual <= 1e-7


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_solve_level_one_two_sites(seed):
    rho = random_state(2, seed)
    res = solve(rho, 1, TIGHT)
    s = sum(von_neumann_entropy(partial_trace(rho, [k])) for k in (1, 2))
    assert res.entropy == pytest.approx(s, abs=1e-8)


def test_solve_level_n_is_target():
    rho = random_state(3, 2)
    res = solve(rho, 3)
    assert res.sigma is rho or np.array_equal(res.sigma.data, rho.data)
    basis = local_basis(3, 3)
    rebuilt = herm_exp(basis.operator(res.dual_params))
    assert np.allclose(rebuilt / np.trace(rebuilt).real, rho.data, atol=1e-10)


def test_solve_recovers_exponential_family_member():
    state = sigma_g(3.0, FamilyParams(n=3, theta=0.6, phi=0.3))
    res = solve(state, 2)
    assert res.entropy == pytest.approx(von_neumann_entropy(state), abs=1e-6)
    assert np.max(np.abs(res.sigma.data - state.data)) <= 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("level", [1, 2])
def test_solve_matches_classical_scaling(seed, level):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(27))
    target = DensityMatrix(np.diag(p).astype(complex), 3)
    res = solve(target, level, TIGHT)
    q = ipf(p, 3, level)
    assert res.entropy == pytest.approx(shannon(q), abs=1e-7)
    assert np.max(np.abs(np.diag(res.sigma.data).real - q)) <= 1e-6


def test_solver_properties():
    rho = regularize(ghz1_pure(3, 0.6, 0.3), 1e-2)
    cfg = SolverConfig()
    basis = local_basis(3, 2)
    res = solve(rho, 2, cfg, basis=basis)
    assert res.residual <= cfg.grad_tol
    hist = np.array(res.objective_history)
    assert np.all(np.diff(hist) <= 1e-12)
    assert res.entropy >= von_neumann_entropy(rho) - 1e-9
    assert np.max(np.abs(expectations(res.sigma, basis) - expectations(rho, basis))) <= cfg.grad_tol
    rebuilt = herm_exp(basis.operator(res.dual_params))
    assert np.allclose(rebuilt / np.trace(rebuilt).real, res.sigma.data, atol=1e-10)


def test_warm_start_reuses_parameters():
    rho = regularize(ghz1_pure(3, 0.6, 0.3), 1e-2)
    cold = solve(rho, 2)
    warm = solve(rho, 2, init=cold.dual_params)
    assert warm.iterations <= 1
    assert warm.entropy == pytest.approx(cold.entropy, abs=1e-9)


def test_solve_errors():
    with pytest.raises(ValueError):
        solve(ghz1_pure(3, 0.5, 0.3), 2)
    with pytest.raises(ValueError):
        solve(DensityMatrix(np.eye(3**5) / 3**5, 5), 2)
    rho = regularize(ghz1_pure(3, 0.6, 0.3), 1e-4)
    with pytest.raises(ConvergenceError) as info:
        solve(rho, 2, SolverConfig(max_iters=1))
    assert info.value.iterations == 1
    assert info.value.residual > 0


# -- regularized spectrum ---------------------------------------------------------

def test_spectrum_of_maximally_mixed_state():
    s = regularized_spectrum(DensityMatrix(np.eye(27) / 27, 3))
    assert all(abs(v) <= 1e-9 for v in s.values.values())


def test_spectrum_balanced_ghz1():
    theta = float(np.arccos(1 / np.sqrt(3)))
    s = regularized_spectrum(ghz1_pure(3, theta, np.pi / 4))
    assert s[2] == pytest.approx(2 * LN3, abs=1e-2)
    assert s[3] == pytest.approx(LN3, abs=1e-2)
    assert s.method == "oracle"
    seq = s.metadata["epsilon_sequence"]
    assert [e["eps"] for e in seq] == [1e-2, 1e-3, 1e-4]
    assert s.metadata["max_telescoping_error"] <= 1e-6
    for entry in seq:
        assert sum(entry["values"].values()) == pytest.approx(entry["total"], abs=1e-6)


def test_spectrum_total_matches_regularized_total_correlation():
    rho = random_state(3, 5, rank=3)
    cfg = SolverConfig(epsilon_schedule=(1e-2, 1e-3))
    s = regularized_spectrum(rho, cfg)
    for entry in s.metadata["epsilon_sequence"]:
        assert entry["total"] == pytest.approx(total_correlation(regularize(rho, entry["eps"])), abs=1e-12)
        assert min(entry["values"].values()) >= -1e-7
