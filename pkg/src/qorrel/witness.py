"""Certificates for whether a pure state is fixed by its (n-1)-site marginals.

Two checks live here. For a state split as ``psi = P1 psi + P2 psi`` by
site-wise orthogonal product projectors, flipping the sign of the second
branch leaves every (n-1)-local expectation unchanged, so no (n-1)-local sum
can single out ``psi``. Conversely, a state that is the unique top eigenvector
of some (n-1)-local sum carries no irreducible n-party correlation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .operators import OperatorSum, omega, q_pair
from .tensor import SiteOperator, _as_generator, embed_array, random_hermitian


@dataclass(frozen=True)
class ProjectorPair:
    p1: tuple[np.ndarray, ...]
    p2: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.p1) != len(self.p2):
            raise ValueError("projector lists must have one entry per site")
        for a, b in zip(self.p1, self.p2):
            if np.max(np.abs(a @ b)) > 1e-12:
                raise ValueError("site projectors are not orthogonal")

    @property
    def n(self) -> int:
        return len(self.p1)

    def branches(self, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _apply_product(self.p1, psi), _apply_product(self.p2, psi)


def _apply_product(factors, psi: np.ndarray) -> np.ndarray:
    n = len(factors)
    t = np.asarray(psi, dtype=complex).reshape((3,) * n)
    for site, f in enumerate(factors):
        t = np.moveaxis(np.tensordot(f, t, axes=([1], [site])), 0, site)
    return t.reshape(-1)


def _basis_split(k: int) -> tuple[np.ndarray, np.ndarray]:
    p = np.zeros((3, 3), dtype=complex)
    p[k, k] = 1.0
    return p, np.eye(3) - p


def ghz1_pair(n: int) -> ProjectorPair:
    """``|0><0|`` against its complement on every site."""
    a, b = _basis_split(0)
    return ProjectorPair((a,) * n, (b,) * n)


def ghz2_pair(n: int) -> ProjectorPair:
    """``|1><1|`` against its complement on every site."""
    a, b = _basis_split(1)
    return ProjectorPair((a,) * n, (b,) * n)


def _decomposes(psi: np.ndarray, pair: ProjectorPair, tol: float) -> bool:
    a, b = pair.branches(psi)
    return (np.linalg.norm(a + b - psi) <= tol
            and np.linalg.norm(a) > 1e-8 and np.linalg.norm(b) > 1e-8)


def find_projector_pair(psi: np.ndarray, n: int, tol: float = 1e-10) -> ProjectorPair | None:
    """Search the basis-aligned splits (one basis vector against the rest, per site)."""
    psi = np.asarray(psi, dtype=complex)
    splits = [(k, flip) for k in range(3) for flip in (False, True)]
    for choice in itertools.product(splits, repeat=n):
        if choice[0][1]:
            continue  # swapping P1 and P2 gives the same pair
        p1, p2 = [], []
        for k, flip in choice:
            a, b = _basis_split(k)
            p1.append(b if flip else a)
            p2.append(a if flip else b)
        pair = ProjectorPair(tuple(p1), tuple(p2))
        if _decomposes(psi, pair, tol):
            return pair
    return None


def flip_state(psi, pair: ProjectorPair, tol: float = 1e-10) -> np.ndarray:
    """``P1 psi - P2 psi``, normalized."""
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    a, b = pair.branches(psi)
    if np.linalg.norm(a + b - psi) > tol:
        raise ValueError("state is not the sum of its two projected branches")
    if np.linalg.norm(a) <= 1e-8 or np.linalg.norm(b) <= 1e-8:
        raise ValueError("one projected branch vanishes; the split is trivial")
    out = a - b
    return out / np.linalg.norm(out)


def random_local_sum(n: int, seed=None, locality: int | None = None) -> OperatorSum:
    """Independent random Hermitian terms on every ``locality``-subset (default n-1)."""
    k = n - 1 if locality is None else locality
    rng = _as_generator(seed)
    terms = tuple(SiteOperator(s, random_hermitian(3**k, rng))
                  for s in itertools.combinations(range(1, n + 1), k))
    return OperatorSum(n, terms)


@dataclass
class WitnessReport:
    samples: int
    seed: int | None
    max_deviation: float
    overlap: float
    deviations: list[float] = field(default_factory=list, repr=False)

    def holds(self, tol: float = 1e-10) -> bool:
        return self.max_deviation <= tol


def witness_expectation_test(psi, pair: ProjectorPair, samples: int = 100, seed=None) -> WitnessReport:
    """Compare ``<psi|Q|psi>`` with ``<psi'|Q|psi'>`` over random (n-1)-local ``Q``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    flipped = flip_state(psi, pair)
    n = pair.n
    rng = _as_generator(seed)
    devs = []
    for _ in range(samples):
        q = random_local_sum(n, rng).matrix
        e1 = np.real(psi.conj() @ q @ psi)
        e2 = np.real(flipped.conj() @ q @ flipped)
        devs.append(float(abs(e1 - e2)))
    overlap = float(abs(psi.conj() @ flipped))
    seed_out = seed if isinstance(seed, (int, type(None))) else None
    return WitnessReport(samples, seed_out, max(devs, default=0.0), overlap, devs)


@dataclass
class UemeCertificate:
    operator: OperatorSum
    top_eigenvalue: float
    gap: float
    fidelity: float
    holds: bool


def ueme_check(op: OperatorSum, psi, gap_tol: float = 1e-8, fid_tol: float = 1e-8) -> UemeCertificate:
    """Is ``psi`` the unique eigenvector of the top eigenvalue of ``op``?"""
    n = op.n
    if any(len(t.support) >= n for t in op.terms):
        raise ValueError("every term must act on at most n-1 sites")
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    w, v = np.linalg.eigh(op.matrix)
    gap = float(w[-1] - w[-2])
    fid = float(abs(v[:, -1].conj() @ psi) ** 2)
    ok = gap > gap_tol and fid >= 1 - fid_tol
    return UemeCertificate(op, float(w[-1]), gap, fid, ok)


@dataclass
class TopSpaceReport:
    psi_in_top: bool
    flipped_in_top: bool
    top_eigenvalue: float
    residual_psi: float
    residual_flipped: float


def top_space_membership(op: OperatorSum, psi, pair: ProjectorPair, tol: float = 1e-8) -> TopSpaceReport:
    """Check whether ``psi`` and its flip are both top eigenvectors of ``op``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    flipped = flip_state(psi, pair)
    mat = op.matrix
    top = float(np.linalg.eigvalsh(mat)[-1])
    r1 = float(np.linalg.norm(mat @ psi - top * psi))
    r2 = float(np.linalg.norm(mat @ flipped - top * flipped))
    return TopSpaceReport(r1 <= tol, r2 <= tol, top, r1, r2)


def aligned_sum_with_top_state(n: int, seed=None) -> OperatorSum:
    """(n-1)-local sum whose top eigenspace contains span{|0^n>, |1^n>, |2^n>}.

    Weighted pair projectors reach their common maximum on the aligned strings;
    each perturbation ``-(1 - Q_12) A (1 - Q_12)`` is negative semidefinite and
    vanishes there.
    """
    rng = _as_generator(seed)
    terms = [float(rng.uniform(0.5, 2.0)) * q_pair(i, j)
             for i, j in itertools.combinations(range(1, n + 1), 2)]
    k = max(2, n - 1)
    support = tuple(range(1, k + 1))
    g = random_hermitian(3**k, rng)
    a = g @ g.conj().T
    kill = np.eye(3**k) - embed_array(q_pair(1, 2).data, (1, 2), k)
    terms.append(SiteOperator(support, -(kill @ a @ kill)))
    return OperatorSum(n, tuple(terms))


def weighted_omega(n: int, m: int, seed=None) -> OperatorSum:
    """Random positive reweighting of the second-family generator's terms."""
    rng = _as_generator(seed)
    return OperatorSum(n, tuple(float(rng.uniform(0.5, 2.0)) * t for t in omega(n, m).terms))

