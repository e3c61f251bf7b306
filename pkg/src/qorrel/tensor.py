"""Dense linear algebra on tensor products of qutrit sites.

Sites are numbered from 1. Site 1 is the most significant base-3 digit of a
computational-basis index, so ``|i j k>`` sits at row ``9*i + 3*j + k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

QUTRIT = 3
HERMITIAN_TOL = 1e-10
ENTROPY_CUTOFF = 1e-12


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def hermiticity_error(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)))


def _hermitize(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Symmetrize ``a`` if it is Hermitian up to roundoff, otherwise raise.

    The tolerance is relative to ``max(1, max|a|)`` so that large exponents
    such as ``30 * Omega`` are not rejected for last-digit noise.
    """
    a = np.asarray(a, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    err = hermiticity_error(a)
    if err > tol * scale:
        raise ValueError(f"matrix is not Hermitian (max deviation {err:.3e})")
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class DensityMatrix:
    """A normalized, positive semidefinite state on ``n`` sites of dimension ``d``."""

    data: np.ndarray
    n: int
    d: int = QUTRIT
    sites: tuple[int, ...] = field(default=())

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        dim = self.d**self.n
        if data.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix for n={self.n}, got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if not self.sites:
            object.__setattr__(self, "sites", tuple(range(1, self.n + 1)))
        elif len(self.sites) != self.n:
            raise ValueError("site list length does not match n")

    @classmethod
    def from_array(cls, data, n: int | None = None, d: int = QUTRIT, *, check: bool = True,
                   tol: float = 1e-10) -> "DensityMatrix":
        data = np.asarray(data, dtype=complex)
        if n is None:
            n = int(round(np.log(data.shape[0]) / np.log(d)))
        if check:
            data = validate_density(data, tol=tol)
        return cls(data, n, d)

    @classmethod
    def from_ket(cls, psi, n: int | None = None, d: int = QUTRIT) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls.from_array(np.outer(psi, psi.conj()), n, d)

    @property
    def dim(self) -> int:
        return self.d**self.n

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def validate_density(data: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Return the Hermitian part of ``data`` after checking the state invariants."""
    data = np.asarray(data, dtype=complex)
    if hermiticity_error(data) > tol:
        raise ValueError("density matrix is not Hermitian")
    data = 0.5 * (data + data.conj().T)
    tr = np.trace(data).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix has trace {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(data)[0]
    if lo < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
    return data


@dataclass(frozen=True)
class SiteOperator:
    """A Hermitian (or, for the shift operator, unitary) matrix acting on ``support``.

    The tensor factors of ``data`` follow the order of ``support``.
    """

    support: tuple[int, ...]
    data: np.ndarray
    d: int = QUTRIT

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        if len(set(support)) != len(support):
            raise ValueError(f"repeated site in support {support}")
        if any(s < 1 for s in support):
            raise ValueError(f"site indices start at 1, got {support}")
        data = np.array(self.data, dtype=complex)
        dim = self.d ** len(support)
        if data.shape != (dim, dim):
            raise ValueError(f"operator on {len(support)} sites must be {dim}x{dim}")
        data.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "data", data)

    def __mul__(self, scalar) -> "SiteOperator":
        return SiteOperator(self.support, scalar * self.data, self.d)

    __rmul__ = __mul__

    def embed(self, n: int) -> np.ndarray:
        return embed(self, n)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def kron(*ops) -> np.ndarray:
    """Kronecker product of any number of matrices, left factor most significant."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(o) for o in ops))


def embed_array(data: np.ndarray, support: Sequence[int], n: int, d: int = QUTRIT) -> np.ndarray:
    support = tuple(support)
    if any(s < 1 or s > n for s in support):
        raise ValueError(f"support {support} not within sites 1..{n}")
    k = len(support)
    rest = [s for s in range(1, n + 1) if s not in support]
    full = np.kron(np.asarray(data), np.eye(d ** (n - k)))
    # axis order of ``full``: support sites, then remaining sites
    order = [s - 1 for s in support] + [s - 1 for s in rest]
    perm = np.argsort(order)
    t = full.reshape((d,) * (2 * n))
    t = t.transpose(list(perm) + [n + p for p in perm])
    return t.reshape(d**n, d**n)


def embed(op: SiteOperator, n: int) -> np.ndarray:
    """Lift a site operator to the full ``d**n`` space (identity elsewhere)."""
    return embed_array(op.data, op.support, n, op.d)


def partial_trace_array(a: np.ndarray, keep: Iterable[int], n: int, d: int = QUTRIT) -> np.ndarray:
    """Trace out every site not in ``keep``; kept sites stay in ascending order."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 1 or keep[-1] > n:
        raise ValueError(f"keep set {keep} not within sites 1..{n}")
    a = np.asarray(a)
    t = a.reshape((d,) * (2 * n))
    traced = [s - 1 for s in range(1, n + 1) if s not in keep]
    # trace the highest axes first so lower indices stay valid
    m = n
    for ax in sorted(traced, reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + m)
        m -= 1
    dk = d ** len(keep)
    return t.reshape(dk, dk)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    keep = sorted(set(int(k) for k in keep))
    red = partial_trace_array(rho.data, keep, rho.n, rho.d)
    sites = tuple(rho.sites[k - 1] for k in keep)
    return DensityMatrix(red, len(keep), rho.d, sites)


def eigh(a: np.ndarray) -> Spectrum:
    """Eigendecomposition with eigenvalues in descending order."""
    w, v = np.linalg.eigh(_hermitize(a))
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def herm_apply(a: np.ndarray, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    spec = eigh(a)
    v = spec.eigenvectors
    out = (v * func(spec.eigenvalues)) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def herm_exp(a: np.ndarray) -> np.ndarray:
    return herm_apply(a, np.exp)


def normalized_exp(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Return ``exp(a) / tr exp(a)`` and ``ln tr exp(a)`` without overflow."""
    spec = eigh(a)
    w, v = spec.eigenvalues, spec.eigenvectors
    top = w[0]
    p = np.exp(w - top)
    z = p.sum()
    out = (v * (p / z)) @ v.conj().T
    return 0.5 * (out + out.conj().T), float(top + np.log(z))


def entropy_of_spectrum(p: np.ndarray, cutoff: float = ENTROPY_CUTOFF) -> float:
    p = np.asarray(p, dtype=float)
    p = p[(p >= cutoff) & (p > 0)]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho) -> float:
    """Entropy in nats; eigenvalues below 1e-12 contribute nothing."""
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    w = np.linalg.eigvalsh(_hermitize(data))
    return max(entropy_of_spectrum(w), 0.0)


def trace_distance(a, b) -> float:
    a = a.data if isinstance(a, DensityMatrix) else np.asarray(a)
    b = b.data if isinstance(b, DensityMatrix) else np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    w = np.linalg.eigvalsh(_hermitize(a - b))
    return float(0.5 * np.sum(np.abs(w)))


def fidelity_with_ket(rho, psi) -> float:
    """Return <psi|rho|psi> for a normalized ket."""
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return float(np.real(psi.conj() @ data @ psi))


def random_hermitian(dim: int, seed=None) -> np.ndarray:
    """Draw ``(G + G^dagger) / 2`` with G complex standard Gaussian."""
    if dim < 1:
        raise ValueError("dim must be positive")
    rng = _as_generator(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    return eigh(random_hermitian(dim, seed)).eigenvectors


def basis_ket(digits: Sequence[int], d: int = QUTRIT) -> np.ndarray:
    """Computational basis ket for the digit string ``digits`` (site 1 first)."""
    idx = 0
    for x in digits:
        idx = idx * d + int(x)
    psi = np.zeros(d ** len(digits), dtype=complex)
    psi[idx] = 1.0
    return psi


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a
