import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qorrel.closed_forms import (
    CorrelationSpectrum,
    chi_of_alpha,
    coefficient_entropy,
    h2,
    h3,
    shannon,
    theorem1_spectrum,
    theorem2_spectrum,
    theorem3_spectrum,
    total_correlation,
    varphi_from_coefficients,
)
from qorrel.operators import ALPHA_MAX
from qorrel.states import (
    FamilyParams,
    ghz1,
    ghz1_pure,
    ghz2,
    ms_state,
    spherical_diagonal,
)
from qorrel.tensor import DensityMatrix, partial_trace, von_neumann_entropy

LN2, LN3 = np.log(2), np.log(3)
BALANCED = float(np.arccos(1 / np.sqrt(3)))
ANGLES = np.linspace(0.15, np.pi / 4, 5)


def random_c(seed, rank=None):
    rng = np.random.default_rng(seed)
    k = rank or int(rng.integers(1, 4))
    g = rng.standard_normal((3, k)) + 1j * rng.standard_normal((3, k))
    c = g @ g.conj().T
    return c / np.trace(c).real


def test_h2_examples():
    assert h2(0.0) == 0.0
    assert h2(np.pi / 4) == pytest.approx(LN2, abs=1e-15)
    assert h2(np.pi / 3) == pytest.approx(-0.25 * np.log(0.25) - 0.75 * np.log(0.75), abs=1e-15)
    assert h2(np.pi / 2) == pytest.approx(0.0, abs=1e-15)


def test_h3_examples():
    for t in ANGLES:
        assert h3(t, 0.0) == pytest.approx(h2(t), abs=1e-15)
    assert h3(np.pi / 4, np.pi / 4) == pytest.approx(1.5 * LN2, abs=1e-15)
    assert h3(BALANCED, np.pi / 4) == pytest.approx(LN3, abs=1e-15)


@settings(max_examples=50)
@given(theta=st.floats(0, np.pi / 2), phi=st.floats(0, np.pi / 2))
def test_h3_is_shannon_of_diagonal(theta, phi):
    assert h3(theta, phi) == pytest.approx(shannon(spherical_diagonal(theta, phi)), abs=1e-12)


def test_theorem1_examples():
    s = theorem1_spectrum(FamilyParams.pure(3, BALANCED, np.pi / 4))
    assert s[2] == pytest.approx(2 * LN3, abs=1e-12)
    assert s[3] == pytest.approx(LN3, abs=1e-12)
    assert s[2] == pytest.approx(2.19722, abs=1e-5) and s[3] == pytest.approx(1.09861, abs=1e-5)
    theta, phi = 0.5, 0.3
    pure = theorem1_spectrum(FamilyParams.pure(5, theta, phi))
    assert pure[2] == pytest.approx(4 * h3(theta, phi), abs=1e-12)
    assert pure[5] == pytest.approx(h3(theta, phi), abs=1e-12)
    assert pure[3] == pure[4] == 0.0
    diag = theorem1_spectrum(FamilyParams(n=4, theta=theta, phi=phi))
    assert diag[4] == pytest.approx(0.0, abs=1e-12)


def test_theorem1_rejects_inconsistent_entropy():
    with pytest.raises(ValueError):
        theorem1_spectrum(FamilyParams(n=3, theta=0.5, phi=0.3), s_g=5.0)


def test_theorem2_examples():
    theta, phi = 0.7, 0.4
    for n, m in [(3, 1), (4, 1), (4, 2), (5, 2)]:
        s = theorem2_spectrum(FamilyParams.pure(n, theta, phi, m=m))
        expect = {k: 0.0 for k in range(2, n + 1)}
        expect[2] += m * h2(theta) + (n - m - 1) * h3(theta, phi)
        expect[n - m] += np.sin(theta) ** 2 * h2(phi)
        expect[n] += h2(theta)
        for k in expect:
            assert s[k] == pytest.approx(expect[k], abs=1e-7), (n, m, k)
        assert s.metadata["middle_level"] == n - m
    diag = theorem2_spectrum(FamilyParams(n=4, m=1, theta=theta, phi=phi))
    assert diag.nonzero_levels(1e-12) == [2]
    assert diag[2] == pytest.approx(h2(theta) + 2 * h3(theta, phi), abs=1e-12)


def test_theorem2_four_sites_balanced():
    s = theorem2_spectrum(FamilyParams.pure(4, np.pi / 4, np.pi / 4, m=1))
    # independent value: the level sum must equal the total correlation of the state
    tc = total_correlation(ghz2(FamilyParams.pure(4, np.pi / 4, np.pi / 4, m=1)))
    assert s[2] == pytest.approx(tc - 0.5 * LN2 - LN2, abs=1e-7)
    assert s[2] == pytest.approx(4 * LN2, abs=1e-7)
    assert s[3] == pytest.approx(0.5 * LN2, abs=1e-7)
    assert s[4] == pytest.approx(LN2, abs=1e-7)


def test_theorem2_rejects_missing_split():
    with pytest.raises(ValueError):
        theorem2_spectrum(FamilyParams(n=3, theta=0.5, phi=0.3))


def test_varphi_psd_violation():
    c = np.diag(spherical_diagonal(0.9, 0.5))
    c[0, 2] = c[2, 0] = 0.5
    with pytest.raises(ValueError):
        varphi_from_coefficients(c, 0.9, 0.5)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_theorem2_psd_bound(seed):
    c = random_c(seed)
    p = FamilyParams.from_coefficients(3, c, m=1)
    st4 = np.sin(p.theta) ** 4
    assert np.cos(2 * p.phi) ** 2 + 4 * abs(c[0, 2]) ** 2 / st4 <= 1 + 1e-9


def test_theorem3_examples():
    for n in (4, 5, 6):
        for a in (0.2, 0.5, ALPHA_MAX):
            assert theorem3_spectrum(n, a)[n - 1] == pytest.approx(LN3, abs=1e-15)
    top = theorem3_spectrum(4, ALPHA_MAX)
    assert chi_of_alpha(ALPHA_MAX) == pytest.approx(0.0, abs=1e-7)
    assert top[2] == pytest.approx(2 * LN3, abs=1e-12)
    s = theorem3_spectrum(4, 0.5)
    singles = von_neumann_entropy(partial_trace(ms_state(4, 0.5), [1]))
    assert s[2] == pytest.approx(singles + 2 * LN3, abs=1e-10)
    assert s[3] == pytest.approx(LN3) and s[4] == 0.0


def test_theorem3_merges_at_three_sites():
    s = theorem3_spectrum(3, 0.5)
    assert s.metadata["merged_levels"] is True
    assert s[3] == 0.0
    assert s[2] == pytest.approx(h3(chi_of_alpha(0.5), np.pi / 4) + 2 * LN3, abs=1e-12)
    with pytest.raises(ValueError):
        theorem3_spectrum(2, 0.5)


@pytest.mark.parametrize("alpha", np.linspace(0.05, ALPHA_MAX, 7))
def test_chi_matches_marginal_spectrum(alpha):
    chi = chi_of_alpha(alpha)
    w = np.sort(np.linalg.eigvalsh(partial_trace(ms_state(3, alpha), [1]).data))[::-1]
    c2 = np.cos(chi) ** 2
    assert np.allclose(w, [c2, (1 - c2) / 2, (1 - c2) / 2], atol=1e-10)


def test_chi_small_alpha_limit():
    assert np.cos(chi_of_alpha(1e-9)) ** 2 == pytest.approx(1 / 3, abs=1e-8)
    with pytest.raises(ValueError):
        chi_of_alpha(0.0)


def test_total_correlation_examples():
    one = np.diag([0.2, 0.5, 0.3]).astype(complex)
    prod = DensityMatrix.from_array(np.kron(np.kron(one, one), one), 3)
    assert total_correlation(prod) == pytest.approx(0.0, abs=1e-12)
    theta, phi = 0.6, 0.3
    assert total_correlation(ghz1_pure(4, theta, phi)) == pytest.approx(4 * h3(theta, phi), abs=1e-10)
    for n in (3, 4):
        chi = chi_of_alpha(0.6)
        expect = h3(chi, np.pi / 4) + (n - 1) * LN3
        assert total_correlation(ms_state(n, 0.6)) == pytest.approx(expect, abs=1e-10)


@pytest.mark.parametrize("n", [3, 4])
def test_telescoping_family1_grid(n):
    for i, (t, p) in enumerate([(t, p) for t in ANGLES for p in ANGLES]):
        c = np.diag(spherical_diagonal(t, p)).astype(complex)
        c[0, 1] = 0.3 * np.sqrt(c[0, 0].real * c[1, 1].real) * np.exp(0.4j * i)
        c[1, 0] = np.conj(c[0, 1])
        params = FamilyParams(n=n, c=c, theta=t, phi=p)
        s = theorem1_spectrum(params)
        assert s.level_sum() == pytest.approx(s.total, abs=1e-12)
        assert s.total == pytest.approx(total_correlation(ghz1(params)), abs=1e-9)
        assert min(s.values.values()) >= -1e-9


@pytest.mark.parametrize("n,m", [(3, 1), (4, 1), (4, 2)])
def test_telescoping_family2_grid(n, m):
    for i, (t, p) in enumerate([(t, p) for t in ANGLES for p in ANGLES]):
        c = np.diag(spherical_diagonal(t, p)).astype(complex)
        c[0, 2] = 0.8 * np.sqrt(c[0, 0].real * c[2, 2].real) * np.exp(0.9j * i)
        c[2, 0] = np.conj(c[0, 2])
        params = FamilyParams(n=n, m=m, c=c, theta=t, phi=p)
        s = theorem2_spectrum(params)
        assert s.level_sum() == pytest.approx(s.total, abs=1e-12)
        assert s.total == pytest.approx(total_correlation(ghz2(params)), abs=1e-9)
        assert min(s.values.values()) >= -1e-9


@pytest.mark.parametrize("n", [3, 4])
def test_telescoping_ms_grid(n):
    for a in np.linspace(0.1, ALPHA_MAX, 5):
        s = theorem3_spectrum(n, a)
        assert s.level_sum() == pytest.approx(s.total, abs=1e-12)
        assert s.total == pytest.approx(total_correlation(ms_state(n, a)), abs=1e-9)
        assert min(s.values.values()) >= -1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_spectra_nonnegative_for_random_coefficients(seed):
    c = random_c(seed)
    for n in (3, 4):
        assert min(theorem1_spectrum(FamilyParams.from_coefficients(n, c)).values.values()) >= -1e-9
        for m in range(1, n - 1):
            s = theorem2_spectrum(FamilyParams.from_coefficients(n, c, m=m))
            assert min(s.values.values()) >= -1e-9


def test_coefficient_entropy_equals_state_entropy():
    c = random_c(3, rank=2)
    rho = ghz1(FamilyParams(n=3, c=c))
    assert coefficient_entropy(c) == pytest.approx(von_neumann_entropy(rho), abs=1e-10)


def test_spectrum_container():
    s = CorrelationSpectrum(4, {3: 0.5, 2: 1.0}, 1.5, "analytic")
    assert list(s.values) == [2, 3, 4]
    assert s[4] == 0.0
    assert s.nonzero_levels() == [2, 3]
    d = s.to_dict()
    assert d["spectrum"] == {"2": 1.0, "3": 0.5, "4": 0.0}
