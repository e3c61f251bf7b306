"""The three qutrit state families and the exponential-form states that approach them.

Diagonal coefficients follow the spherical convention
``(c00, c11, c22) = (sin^2 t cos^2 p, cos^2 t, sin^2 t sin^2 p)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import operators as ops
from .tensor import (
    DensityMatrix,
    basis_ket,
    embed,
    embed_array,
    normalized_exp,
    validate_density,
)

ANGLE_MAX = np.pi / 2
THETA_MIN = 1e-6


def spherical_diagonal(theta: float, phi: float) -> np.ndarray:
    st2 = np.sin(theta) ** 2
    return np.array([st2 * np.cos(phi) ** 2, np.cos(theta) ** 2, st2 * np.sin(phi) ** 2])


def validate_coefficients(c, tol: float = 1e-10) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if c.shape != (3, 3):
        raise ValueError(f"coefficient matrix must be 3x3, got {c.shape}")
    try:
        return validate_density(c, tol=tol)
    except ValueError as exc:
        raise ValueError(f"invalid coefficient matrix: {exc}") from None


def _check_angle(name: str, value: float, lo: float = 0.0, hi: float = ANGLE_MAX) -> None:
    if not lo - 1e-12 <= value <= hi + 1e-12:
        raise ValueError(f"{name}={value} outside [{lo}, {hi}]")


@dataclass(frozen=True, eq=False)
class FamilyParams:
    """Parameters shared by the state families.

    ``c`` is the 3x3 coefficient matrix in the family's three-vector basis.
    ``theta``/``phi`` are optional; when given they must reproduce the
    diagonal of ``c``.
    """

    n: int
    c: np.ndarray = field(default=None, repr=False)
    theta: float | None = None
    phi: float | None = None
    m: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least two sites, got n={self.n}")
        if self.m is not None and not 1 <= self.m <= self.n - 1:
            raise ValueError(f"split index m must satisfy 1 <= m <= n-1, got {self.m}")
        if self.alpha is not None:
            ops._check_alpha(self.alpha)
        if self.theta is not None:
            _check_angle("theta", self.theta)
        if self.phi is not None:
            _check_angle("phi", self.phi)
        if self.c is None:
            if self.theta is None or self.phi is None:
                return
            c = np.diag(spherical_diagonal(self.theta, self.phi)).astype(complex)
        else:
            c = validate_coefficients(self.c)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if self.theta is not None and self.phi is not None:
            diag = spherical_diagonal(self.theta, self.phi)
            if np.max(np.abs(np.diag(c).real - diag)) > 1e-12:
                raise ValueError("coefficient diagonal disagrees with (theta, phi)")

    @classmethod
    def from_coefficients(cls, n: int, c, m: int | None = None) -> "FamilyParams":
        """Build params from ``c`` alone, recovering ``theta, phi`` from its diagonal."""
        c = validate_coefficients(c)
        theta, phi = angles_from_diagonal(np.diag(c).real)
        return cls(n=n, c=c, theta=theta, phi=phi, m=m)

    @classmethod
    def pure(cls, n: int, theta: float, phi: float, m: int | None = None) -> "FamilyParams":
        """Rank-one ``c`` with amplitudes ``(sin t cos p, cos t, sin t sin p)``."""
        amp = np.array([np.sin(theta) * np.cos(phi), np.cos(theta), np.sin(theta) * np.sin(phi)])
        return cls(n=n, c=np.outer(amp, amp).astype(complex), theta=theta, phi=phi, m=m)

    def with_coherence(self, i: int, j: int, value: complex) -> "FamilyParams":
        c = np.array(self.c, dtype=complex)
        c[i, j] = value
        c[j, i] = np.conj(value)
        return replace(self, c=c)


def angles_from_diagonal(diag) -> tuple[float, float]:
    c00, c11, c22 = (float(x) for x in diag)
    theta = float(np.arccos(np.sqrt(np.clip(c11, 0.0, 1.0))))
    s2 = c00 + c22
    phi = float(np.arctan2(np.sqrt(max(c22, 0.0)), np.sqrt(max(c00, 0.0)))) if s2 > 0 else 0.0
    return theta, phi


def load_coefficients(path) -> np.ndarray:
    """Read ``{"c": [[[re, im], ...], ...]}`` and validate it."""
    raw = json.loads(Path(path).read_text())
    try:
        c = np.array([[complex(re, im) for re, im in row] for row in raw["c"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed coefficient file {path}: {exc}") from None
    return validate_coefficients(c)


def dump_coefficients(c, path) -> None:
    c = np.asarray(c, dtype=complex)
    payload = {"c": [[[float(z.real), float(z.imag)] for z in row] for row in c]}
    Path(path).write_text(json.dumps(payload, indent=2))


# -- family bases -----------------------------------------------------------

def ghz1_basis(n: int) -> np.ndarray:
    """Columns ``|0^n>, |1^n>, |2^n>``."""
    return np.column_stack([basis_ket([i] * n) for i in range(3)])


def ghz2_basis(n: int, m: int) -> np.ndarray:
    """Columns ``|0^n>, |1^n>, |0^m 2^(n-m)>``."""
    ops._check_split(n, m)
    return np.column_stack([
        basis_ket([0] * n),
        basis_ket([1] * n),
        basis_ket([0] * m + [2] * (n - m)),
    ])


def ms_basis(n: int, alpha: float) -> np.ndarray:
    """Columns ``M_1 |i^n>`` with ``M`` the site-1 rotation."""
    rot = embed_array(ops.local_rotation(alpha), (1,), n)
    return rot @ ghz1_basis(n)


def _lift(basis: np.ndarray, c: np.ndarray, n: int) -> DensityMatrix:
    data = basis @ c @ basis.conj().T
    return DensityMatrix.from_array(data, n)


# -- family 1 -----------------------------------------------------------------

def ghz1(params: FamilyParams) -> DensityMatrix:
    return _lift(ghz1_basis(params.n), params.c, params.n)


def ghz1_ket(n: int, theta: float, phi: float) -> np.ndarray:
    _check_angle("theta", theta)
    _check_angle("phi", phi)
    amp = [np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)]
    return ghz1_basis(n) @ np.array(amp, dtype=complex)


def ghz1_pure(n: int, theta: float, phi: float) -> DensityMatrix:
    """``cos t |0^n> + sin t cos p |1^n> + sin t sin p |2^n>``."""
    return DensityMatrix.from_ket(ghz1_ket(n, theta, phi), n)


# -- family 2 -----------------------------------------------------------------

def ghz2(params: FamilyParams) -> DensityMatrix:
    if params.m is None:
        raise ValueError("second GHZ family needs the split index m")
    return _lift(ghz2_basis(params.n, params.m), params.c, params.n)


def ghz2_ket(n: int, m: int, theta: float, phi: float) -> np.ndarray:
    _check_angle("theta", theta)
    _check_angle("phi", phi)
    amp = [np.sin(theta) * np.cos(phi), np.cos(theta), np.sin(theta) * np.sin(phi)]
    return ghz2_basis(n, m) @ np.array(amp, dtype=complex)


def ghz2_pure(n: int, m: int, theta: float, phi: float) -> DensityMatrix:
    return DensityMatrix.from_ket(ghz2_ket(n, m, theta, phi), n)


# -- maximal slice ------------------------------------------------------------

def ms_ket(n: int, alpha: float) -> np.ndarray:
    if n < 3:
        raise ValueError(f"MS state needs n >= 3, got {n}")
    ops._check_alpha(alpha)
    return ms_basis(n, alpha).sum(axis=1) / np.sqrt(3.0)


def ms_state(n: int, alpha: float) -> DensityMatrix:
    return DensityMatrix.from_ket(ms_ket(n, alpha), n)


# -- companions ---------------------------------------------------------------

def diagonal_companion(family: str, params: FamilyParams, keep02: bool = False) -> DensityMatrix:
    """``D_g`` (ghz1), ``D_2`` or ``B_2`` (ghz2, ``keep02``), ``D_s`` (ms).

    For ``ms`` only ``params.n`` and ``params.alpha`` are used.
    """
    if family == "ghz1":
        return _lift(ghz1_basis(params.n), np.diag(np.diag(params.c)), params.n)
    if family == "ghz2":
        c = np.diag(np.diag(params.c))
        if keep02:
            c[0, 2] = params.c[0, 2]
            c[2, 0] = params.c[2, 0]
        return _lift(ghz2_basis(params.n, params.m), c, params.n)
    if family == "ms":
        if params.alpha is None:
            raise ValueError("ms companion needs alpha")
        return _lift(ms_basis(params.n, params.alpha), np.eye(3) / 3.0, params.n)
    raise ValueError(f"unknown family tag {family!r}")


# -- exponential-form states --------------------------------------------------

@dataclass(frozen=True)
class GammaKnobs:
    gamma: float
    gamma1: float
    gamma2: float
    eta: float = float("nan")
    varphi: float | None = None
    xi: float | None = None
    zeta: float | None = None


def _single_site_knobs(theta: float, cos2: float) -> tuple[float, float]:
    """Solve ``tanh g2 = cos2`` and ``exp g1 = 2 cosh g2 cot^2 t``."""
    if theta < THETA_MIN:
        raise ValueError("theta = 0 makes cot(theta) singular; use the exact limit state")
    if abs(cos2) >= 1.0 - 1e-12:
        raise ValueError("|cos 2phi| = 1 puts gamma2 at infinity; the target block is rank deficient")
    g2 = float(np.arctanh(cos2))
    g1 = float(np.log(2.0 * np.cosh(g2)) + 2.0 * np.log(1.0 / np.tan(theta)))
    return g1, g2


def _exp_state(exponent: np.ndarray, n: int) -> tuple[DensityMatrix, float]:
    rho, log_z = normalized_exp(exponent)
    return DensityMatrix(rho, n), -log_z


def _require_angles(params: FamilyParams) -> tuple[float, float]:
    if params.theta is not None and params.phi is not None:
        return params.theta, params.phi
    if params.c is None:
        raise ValueError("theta and phi (or a coefficient matrix) are required")
    return angles_from_diagonal(np.diag(params.c).real)


def sigma_g_knobs(gamma: float, params: FamilyParams) -> GammaKnobs:
    theta, phi = _require_angles(params)
    g1, g2 = _single_site_knobs(theta, np.cos(2 * phi))
    return GammaKnobs(gamma, g1, g2)


def sigma_g_exponent(gamma: float, params: FamilyParams) -> ops.OperatorSum:
    k = sigma_g_knobs(gamma, params)
    n = params.n
    z = ops.spin_z()
    terms = [gamma * ops.q_pair(1, j) for j in range(2, n + 1)]
    terms.append(ops.SiteOperator((1,), -k.gamma1 * z @ z + k.gamma2 * z))
    return ops.OperatorSum(n, tuple(terms))


def sigma_g(gamma: float, params: FamilyParams) -> DensityMatrix:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return _exp_state(sigma_g_exponent(gamma, params).matrix, params.n)[0]


def sigma_g_product_form(gamma: float, params: FamilyParams) -> np.ndarray:
    """The factorized expression ``prod_j (1 + (e^g - 1) Q_1j)/(e^g + 2) f(Z_1)``."""
    theta, phi = _require_angles(params)
    n = params.n
    z = embed_array(ops.spin_z(), (1,), n)
    z2 = z @ z
    eye = np.eye(3**n)
    f = (np.cos(theta) ** 2 * (eye - z2)
         + 0.5 * np.sin(theta) ** 2 * (z2 + np.cos(2 * phi) * z))
    eg = np.exp(gamma)
    out = eye.astype(complex)
    for j in range(2, n + 1):
        out = out @ ((eye + (eg - 1.0) * embed(ops.q_pair(1, j), n)) / (eg + 2.0))
    return out @ f


def sigma_2_knobs(gamma: float, params: FamilyParams) -> GammaKnobs:
    theta, phi = _require_angles(params)
    g1, g2 = _single_site_knobs(theta, np.cos(2 * phi))
    n, m = params.n, params.m
    # site m+1 contributes 1 + 2 cosh(g2) exp(-g1); the ln(e^g1 + 2 cosh g2) form is off by g1
    eta = -(m * np.log(2 * np.cosh(gamma) + 1) + (n - m - 1) * np.log(np.exp(gamma) + 2)
            + np.log1p(2 * np.cosh(g2) * np.exp(-g1)))
    return GammaKnobs(gamma, g1, g2, eta=float(eta))


def sigma_2_exponent(gamma: float, params: FamilyParams) -> ops.OperatorSum:
    if params.m is None:
        raise ValueError("sigma_2 needs the split index m")
    k = sigma_2_knobs(gamma, params)
    z = ops.spin_z()
    site = ops.SiteOperator((params.m + 1,), -k.gamma1 * z @ z + k.gamma2 * z)
    return ops.omega(params.n, params.m).scaled(gamma) + ops.OperatorSum(params.n, (site,))


def sigma_2(gamma: float, params: FamilyParams) -> DensityMatrix:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return _exp_state(sigma_2_exponent(gamma, params).matrix, params.n)[0]


def varphi_of(params: FamilyParams) -> float:
    """Angle with ``cos^2 2v = cos^2 2p + 4|c02|^2 / sin^4 t``, taken in [0, pi/4]."""
    theta, phi = _require_angles(params)
    st4 = np.sin(theta) ** 4
    if st4 == 0:
        raise ValueError("theta = 0 leaves varphi undefined")
    cos2sq = np.cos(2 * phi) ** 2 + 4 * abs(params.c[0, 2]) ** 2 / st4
    if cos2sq > 1 + 1e-9:
        raise ValueError(f"|c02| violates the PSD bound (cos^2 2varphi = {cos2sq:.6g})")
    return float(0.5 * np.arccos(np.sqrt(min(cos2sq, 1.0))))


def tau_2_knobs(gamma: float, params: FamilyParams) -> GammaKnobs:
    theta, phi = _require_angles(params)
    vphi = varphi_of(params)
    cos2v = np.cos(2 * vphi)
    g1, g2 = _single_site_knobs(theta, cos2v)
    xi = float(np.arccos(np.clip(np.cos(2 * phi) / cos2v, -1.0, 1.0)))
    # -arg(c02) equals (1/2) arg(c20/c02) modulo pi; this branch fixes the sign
    zeta = float(-np.angle(params.c[0, 2])) if abs(params.c[0, 2]) > 0 else 0.0
    return GammaKnobs(gamma, g1, g2, varphi=vphi, xi=xi, zeta=zeta)


def tau_2_exponent(gamma: float, params: FamilyParams) -> ops.OperatorSum:
    if params.m is None:
        raise ValueError("tau_2 needs the split index m")
    k = tau_2_knobs(gamma, params)
    sr = ops.sigma_r(k.xi, k.zeta, params.n, params.m).data
    site = ops.SiteOperator(tuple(range(params.m + 1, params.n + 1)),
                            -k.gamma1 * sr @ sr + k.gamma2 * sr)
    return ops.omega(params.n, params.m).scaled(gamma) + ops.OperatorSum(params.n, (site,))


def tau_2(gamma: float, params: FamilyParams) -> DensityMatrix:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return _exp_state(tau_2_exponent(gamma, params).matrix, params.n)[0]


def sigma_s_exponent(gamma: float, n: int, alpha: float) -> ops.OperatorSum:
    terms = ops.q_string(n).terms + (ops.r_pair(alpha),)
    return ops.OperatorSum(n, terms).scaled(gamma)


def sigma_s(gamma: float, n: int, alpha: float) -> DensityMatrix:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return _exp_state(sigma_s_exponent(gamma, n, alpha).matrix, n)[0]


def ms_exp_limit(gamma: float, n: int, alpha: float) -> DensityMatrix:
    """Normalized ``exp(gamma (Q + X))``; tends to the MS state."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return _exp_state(gamma * ops.ms_generator(n, alpha).matrix, n)[0]
