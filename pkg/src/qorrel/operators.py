"""Named qutrit operators and the multi-site sums built from them.

All single-site matrices use the basis order ``|0>, |1>, |2>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .tensor import (
    SiteOperator,
    commutator,
    embed,
    embed_array,
    herm_apply,
    kron,
)

ALPHA_MAX = float(np.arctan(np.sqrt(2.0)))

I3 = np.eye(3, dtype=complex)


def _ket(i: int) -> np.ndarray:
    v = np.zeros(3, dtype=complex)
    v[i] = 1.0
    return v


def _proj(i: int, j: int) -> np.ndarray:
    """Single-site ``|i><j|``."""
    return np.outer(_ket(i), _ket(j))


def spin_z() -> np.ndarray:
    return np.diag([1.0, 0.0, -1.0]).astype(complex)


def gell_mann(k: int) -> np.ndarray:
    """Standard Gell-Mann matrix ``lambda_k`` (1 <= k <= 8), ``tr(l_j l_k) = 2 delta_jk``."""
    if k == 1:
        return _proj(0, 1) + _proj(1, 0)
    if k == 2:
        return -1j * _proj(0, 1) + 1j * _proj(1, 0)
    if k == 3:
        return _proj(0, 0) - _proj(1, 1)
    if k == 4:
        return _proj(0, 2) + _proj(2, 0)
    if k == 5:
        return -1j * _proj(0, 2) + 1j * _proj(2, 0)
    if k == 6:
        return _proj(1, 2) + _proj(2, 1)
    if k == 7:
        return -1j * _proj(1, 2) + 1j * _proj(2, 1)
    if k == 8:
        return np.diag([1.0, 1.0, -2.0]).astype(complex) / np.sqrt(3.0)
    raise ValueError(f"Gell-Mann index must be in 1..8, got {k}")


def shift_x() -> np.ndarray:
    """Cyclic shift ``|0><1| + |1><2| + |2><0|``; X^2 = X^dagger, X^3 = 1.

    The printed definition repeats ``|1><2|``; the cyclic completion is the
    only choice consistent with the stated algebra.
    """
    return _proj(0, 1) + _proj(1, 2) + _proj(2, 0)


def local_rotation(alpha: float) -> np.ndarray:
    """``cos(a) + sin(a) (X + X^dagger) / sqrt(2)`` on one site."""
    x = shift_x()
    return np.cos(alpha) * I3 + np.sin(alpha) * (x + x.conj().T) / np.sqrt(2.0)


def _check_pair(i: int, j: int) -> None:
    if i == j:
        raise ValueError(f"pair operator needs distinct sites, got {i}, {j}")


def q_pair(i: int, j: int) -> SiteOperator:
    """``(2/3)[1/2 + cos(2 pi (Z_i - Z_j) / 3)]``: the projector onto aligned pairs."""
    _check_pair(i, j)
    z = spin_z()
    dz = kron(z, I3) - kron(I3, z)
    cos_term = herm_apply(dz, lambda w: np.cos(2 * np.pi * w / 3))
    return SiteOperator((i, j), (2.0 / 3.0) * (0.5 * np.eye(9) + cos_term))


def p_pair(i: int, j: int) -> SiteOperator:
    """``(2 Z_i^2 - 1) lambda3_j``."""
    _check_pair(i, j)
    z = spin_z()
    return SiteOperator((i, j), kron(2 * z @ z - I3, gell_mann(3)))


@dataclass(frozen=True)
class OperatorSum:
    """A sum of site operators on ``n`` sites, kept term by term."""

    n: int
    terms: tuple[SiteOperator, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if any(s > self.n for s in t.support):
                raise ValueError(f"term support {t.support} exceeds n={self.n}")

    @cached_property
    def matrix(self) -> np.ndarray:
        out = np.zeros((3**self.n, 3**self.n), dtype=complex)
        for t in self.terms:
            out += embed(t, self.n)
        return out

    @property
    def max_support(self) -> int:
        return max((len(t.support) for t in self.terms), default=0)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        if other.n != self.n:
            raise ValueError("cannot add operator sums on different site counts")
        return OperatorSum(self.n, self.terms + other.terms)

    def scaled(self, c: float) -> "OperatorSum":
        return OperatorSum(self.n, tuple(c * t for t in self.terms))


def _check_split(n: int, m: int) -> None:
    if n < 2 or not 1 <= m <= n - 1:
        raise ValueError(f"split index m must satisfy 1 <= m <= n-1, got n={n}, m={m}")


def omega(n: int, m: int) -> OperatorSum:
    """``sum_{j<=m} P_{m+1,j} + sum_{l>=m+2} Q_{m+1,l}``."""
    _check_split(n, m)
    a = m + 1
    terms = [p_pair(a, j) for j in range(1, m + 1)]
    terms += [q_pair(a, l) for l in range(m + 2, n + 1)]
    return OperatorSum(n, tuple(terms))


def sigma_pauli(axis: int, n: int, m: int) -> SiteOperator:
    """Pauli-like operators on sites ``m+1..n`` acting within span{|0bar>, |2bar>}."""
    _check_split(n, m)
    z = spin_z()
    tail = n - m - 1
    if axis == 1:
        data = kron(*([gell_mann(4)] * (n - m)))
    elif axis == 2:
        data = kron(gell_mann(5), *([gell_mann(4)] * tail)) if tail else gell_mann(5)
    elif axis == 3:
        data = kron(z, *([z @ z] * tail)) if tail else z
    else:
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    return SiteOperator(tuple(range(m + 1, n + 1)), data)


def sigma_r(xi: float, zeta: float, n: int, m: int) -> SiteOperator:
    s1, s2, s3 = (sigma_pauli(a, n, m).data for a in (1, 2, 3))
    data = (np.cos(xi) * s3 + np.sin(xi) * np.cos(zeta) * s1
            + np.sin(xi) * np.sin(zeta) * s2)
    return SiteOperator(tuple(range(m + 1, n + 1)), data)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= ALPHA_MAX + 1e-12:
        raise ValueError(f"alpha must lie in (0, arctan(sqrt 2)], got {alpha}")


def r_pair(alpha: float) -> SiteOperator:
    """``M Q_12 M`` with ``M`` the site-1 rotation; a rank-3 projector."""
    _check_alpha(alpha)
    mm = kron(local_rotation(alpha), I3)
    return SiteOperator((1, 2), mm @ q_pair(1, 2).data @ mm)


def q_string(n: int, anchor: int = 2) -> OperatorSum:
    """Pair projectors from ``anchor`` to every site numbered 3 and above.

    With the default anchor this is ``sum_{j=3}^n Q_{2j}``.
    """
    if n < 3:
        raise ValueError(f"q_string needs n >= 3, got {n}")
    return OperatorSum(n, tuple(q_pair(anchor, j) for j in range(3, n + 1) if j != anchor))


def ms_beta(alpha: float) -> float:
    """Solve ``cot b = sqrt(2)(cot a - tan a) + 1`` for ``b`` in (0, pi)."""
    _check_alpha(alpha)
    cot_b = np.sqrt(2.0) * (1.0 / np.tan(alpha) - np.tan(alpha)) + 1.0
    return float(np.arctan2(1.0, cot_b))


def ms_coupling(n: int, alpha: float) -> OperatorSum:
    """``cos b Q_12 + (sin b / 2)(X_1 + X_1^dag + prod_{j>=2} X_j + prod_{j>=2} X_j^dag)``."""
    if n < 3:
        raise ValueError(f"MS generator needs n >= 3, got {n}")
    beta = ms_beta(alpha)
    x = shift_x()
    xd = x.conj().T
    string = kron(*([x] * (n - 1)))
    tail = tuple(range(2, n + 1))
    half = 0.5 * np.sin(beta)
    terms = (
        np.cos(beta) * q_pair(1, 2),
        SiteOperator((1,), half * (x + xd)),
        SiteOperator(tail, half * (string + string.conj().T)),
    )
    return OperatorSum(n, terms)


def ms_generator(n: int, alpha: float) -> OperatorSum:
    """``Q + X``: (n-1)-local sum whose unique top eigenvector is the MS state."""
    return q_string(n) + ms_coupling(n, alpha)


def operator_sum_commutator(a: OperatorSum, b: OperatorSum) -> np.ndarray:
    return commutator(a.matrix, b.matrix)


def embed_all(ops: Iterable[SiteOperator], n: int) -> list[np.ndarray]:
    return [embed_array(o.data, o.support, n) for o in ops]
