"""Analytic correlation spectra for the three state families."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import _check_alpha
from .states import angles_from_diagonal
from .tensor import DensityMatrix, entropy_of_spectrum, partial_trace, von_neumann_entropy


@dataclass
class CorrelationSpectrum:
    """Irreducible correlation per level ``k = 2..n``, in nats."""

    n: int
    values: dict[int, float]
    total: float
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = {int(k): float(v) for k, v in sorted(self.values.items())}
        for k in range(2, self.n + 1):
            self.values.setdefault(k, 0.0)
        self.values = dict(sorted(self.values.items()))

    def __getitem__(self, level: int) -> float:
        return self.values[level]

    def level_sum(self) -> float:
        return float(sum(self.values.values()))

    def nonzero_levels(self, tol: float = 1e-2) -> list[int]:
        return [k for k, v in self.values.items() if abs(v) > tol]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "method": self.method,
            "spectrum": {str(k): v for k, v in self.values.items()},
            "total": self.total,
            "metadata": self.metadata,
        }


def h2(alpha: float) -> float:
    """Binary entropy of ``(cos^2 a, sin^2 a)``."""
    c2 = np.cos(alpha) ** 2
    return entropy_of_spectrum([c2, 1.0 - c2], cutoff=0.0)


def h3(theta: float, phi: float) -> float:
    return h2(theta) + np.sin(theta) ** 2 * h2(phi)


def shannon(p) -> float:
    return entropy_of_spectrum(np.asarray(p, dtype=float), cutoff=0.0)


def coefficient_entropy(c) -> float:
    """Entropy of a family state, read off its 3x3 coefficient matrix."""
    return entropy_of_spectrum(np.linalg.eigvalsh(np.asarray(c)))


def _spectrum(n: int, parts: list[tuple[int, float]], total: float, **meta) -> CorrelationSpectrum:
    values: dict[int, float] = {}
    for level, v in parts:
        values[level] = values.get(level, 0.0) + v
    return CorrelationSpectrum(n, values, total, "analytic", meta)


def _entropy_or_default(params, s) -> float:
    if s is not None:
        return float(s)
    return coefficient_entropy(params.c)


def _diag_h3(params) -> float:
    return shannon(np.clip(np.diag(params.c).real, 0.0, None))


def theorem1_spectrum(params, s_g: float | None = None) -> CorrelationSpectrum:
    """``C2 = (n-1) H3``, ``Cn = H3 - S(G)``; every middle level vanishes."""
    n = params.n
    hh = _diag_h3(params)
    s = _entropy_or_default(params, s_g)
    if s > hh + 1e-9:
        raise ValueError(f"state entropy {s} exceeds H3 = {hh}; inconsistent input")
    parts = [(2, (n - 1) * hh), (n, hh - s)]
    return _spectrum(n, parts, n * hh - s, family="ghz1")


def varphi_from_coefficients(c, theta: float, phi: float) -> float:
    st4 = np.sin(theta) ** 4
    cos2sq = np.cos(2 * phi) ** 2 + 4 * abs(c[0, 2]) ** 2 / st4
    if cos2sq > 1 + 1e-9:
        raise ValueError(f"|c02| violates the PSD bound (cos^2 2varphi = {cos2sq:.6g})")
    return float(0.5 * np.arccos(np.sqrt(min(cos2sq, 1.0))))


def theorem2_spectrum(params, s_g2: float | None = None) -> CorrelationSpectrum:
    """Second-family spectrum with the middle jump at level ``n - m``.

    The middle correlation ``H3(t, p) - H3(t, v)`` comes from the ``c02``
    coherence, which first shows up in the ``(n-m)``-site marginals. The
    metadata keeps both that level and the printed label ``m``.
    """
    n, m = params.n, params.m
    if m is None:
        raise ValueError("second family needs m")
    middle = n - m
    if not 2 <= middle <= n:
        raise ValueError(f"middle level n-m={middle} is not a correlation level")
    theta, phi = params.theta, params.phi
    if theta is None or phi is None:
        theta, phi = angles_from_diagonal(np.diag(params.c).real)
    if theta == 0:
        vphi = phi
    else:
        vphi = varphi_from_coefficients(params.c, theta, phi)
    s = _entropy_or_default(params, s_g2)
    hh = h3(theta, phi)
    hv = h3(theta, vphi)
    parts = [(2, m * h2(theta) + (n - m - 1) * hh), (middle, hh - hv), (n, hv - s)]
    total = m * h2(theta) + (n - m) * hh - s
    return _spectrum(n, parts, total, family="ghz2", middle_level=middle, printed_label=m,
                     varphi=vphi)


def chi_of_alpha(alpha: float) -> float:
    _check_alpha(alpha)
    c2 = (3.0 - np.cos(2 * alpha) + 2.0 * np.sqrt(2.0) * np.sin(2 * alpha)) / 6.0
    assert -1e-12 <= c2 <= 1 + 1e-12, c2
    return float(np.arccos(np.sqrt(np.clip(c2, 0.0, 1.0))))


def theorem3_spectrum(n: int, alpha: float) -> CorrelationSpectrum:
    """MS spectrum; at ``n = 3`` levels 2 and ``n-1`` coincide and are merged."""
    if n < 3:
        raise ValueError(f"MS state needs n >= 3, got {n}")
    chi = chi_of_alpha(alpha)
    low = h3(chi, np.pi / 4) + (n - 2) * np.log(3.0)
    parts = [(2, low), (n - 1, np.log(3.0))]
    total = h3(chi, np.pi / 4) + (n - 1) * np.log(3.0)
    return _spectrum(n, parts, total, family="ms", chi=chi, merged_levels=(n == 3))


def total_correlation(rho: DensityMatrix) -> float:
    """``sum_i S(rho_i) - S(rho)``."""
    singles = sum(von_neumann_entropy(partial_trace(rho, [i])) for i in range(1, rho.n + 1))
    return float(singles - von_neumann_entropy(rho))
