"""Maximum-entropy states with prescribed k-site marginals.

The solver minimizes the convex dual

    f(lam) = ln tr exp(sum_i lam_i B_i) - lam . t

over a traceless product basis ``B_i`` of Gell-Mann matrices supported on at
most ``level`` sites, where ``t`` are the target expectations. The gradient is
``<B>_sigma - t``; Newton directions come from conjugate gradients on exact
Hessian-vector products (Daleckii-Krein divided differences), and every step
is accepted by Armijo backtracking, so the dual objective never increases.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from .closed_forms import CorrelationSpectrum, total_correlation
from .operators import gell_mann
from .tensor import (
    DensityMatrix,
    SiteOperator,
    embed_array,
    partial_trace_array,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

MAX_ORACLE_SITES = 4
_GELL_MANN = np.stack([gell_mann(k) for k in range(1, 9)])


class ConvergenceError(RuntimeError):
    """The dual iteration stopped before reaching the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-7
    max_iters: int = 5000
    epsilon_schedule: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    cg_max_iters: int = 400
    warm_start: bool = True

    def __post_init__(self):
        if self.grad_tol <= 0 or self.max_iters <= 0:
            raise ValueError("tolerances and iteration caps must be positive")
        sched = tuple(float(e) for e in self.epsilon_schedule)
        if not sched or any(e <= 0 or e >= 1 for e in sched):
            raise ValueError("epsilon schedule entries must lie in (0, 1)")
        if any(a <= b for a, b in zip(sched, sched[1:])):
            raise ValueError("epsilon schedule must be strictly decreasing")
        object.__setattr__(self, "epsilon_schedule", sched)


class LocalBasis:
    """Traceless Gell-Mann products on every support of size ``1..level``.

    Terms are grouped by support; ``blocks[s]`` stacks the matrices for
    ``supports[s]`` and ``slices[s]`` locates their coefficients.
    """

    def __init__(self, n: int, level: int):
        if not 1 <= level <= n:
            raise ValueError(f"level must lie in 1..{n}, got {level}")
        self.n = n
        self.level = level
        self.supports: list[tuple[int, ...]] = []
        self.blocks: list[np.ndarray] = []
        self.slices: list[slice] = []
        self.labels: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        start = 0
        for k in range(1, level + 1):
            for support in itertools.combinations(range(1, n + 1), k):
                block = _product_block(k)
                self.supports.append(support)
                self.blocks.append(block)
                self.slices.append(slice(start, start + len(block)))
                for idx in itertools.product(range(1, 9), repeat=k):
                    self.labels.append((support, idx))
                start += len(block)
        self.size = start
        # 2^k on the support times 3^(n-k) for the identity elsewhere
        self.norms = np.concatenate([
            np.full(len(b), 2.0 ** len(s) * 3.0 ** (n - len(s)))
            for s, b in zip(self.supports, self.blocks)
        ])

    def __len__(self) -> int:
        return self.size

    @staticmethod
    def expected_size(n: int, level: int) -> int:
        return sum(comb(n, k) * 8**k for k in range(1, level + 1))

    @property
    def terms(self) -> list[SiteOperator]:
        out = []
        for support, block in zip(self.supports, self.blocks):
            out.extend(SiteOperator(support, b) for b in block)
        return out

    def operator(self, coeffs: np.ndarray) -> np.ndarray:
        """``sum_i coeffs_i B_i`` embedded in the full space."""
        dim = 3**self.n
        out = np.zeros((dim, dim), dtype=complex)
        for support, block, sl in zip(self.supports, self.blocks, self.slices):
            local = np.tensordot(coeffs[sl], block, axes=1)
            out += embed_array(local, support, self.n)
        return out

    def expectations(self, a: np.ndarray) -> np.ndarray:
        """``tr(a B_i)`` for every term; ``a`` need not be a state."""
        out = np.empty(self.size)
        marginals = _marginal_cache(a, self.n)
        for support, block, sl in zip(self.supports, self.blocks, self.slices):
            red = marginals(support)
            out[sl] = np.einsum("kab,ba->k", block, red).real
        return out


def _product_block(k: int) -> np.ndarray:
    block = _GELL_MANN
    for _ in range(k - 1):
        block = np.einsum("iab,jcd->ijacbd", block, _GELL_MANN).reshape(
            block.shape[0] * 8, block.shape[1] * 3, block.shape[2] * 3)
    return block


def _marginal_cache(a: np.ndarray, n: int):
    cache: dict[tuple[int, ...], np.ndarray] = {}

    def get(support: tuple[int, ...]) -> np.ndarray:
        if support not in cache:
            cache[support] = partial_trace_array(a, support, n)
        return cache[support]

    return get


def local_basis(n: int, level: int) -> LocalBasis:
    return LocalBasis(n, level)


def expectations(rho, basis: LocalBasis) -> np.ndarray:
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if data.shape != (3**basis.n, 3**basis.n):
        raise ValueError(f"state dimension {data.shape} does not match basis on {basis.n} sites")
    return basis.expectations(data)


@dataclass
class MaxEntResult:
    sigma: DensityMatrix
    entropy: float
    dual_params: np.ndarray
    residual: float
    iterations: int
    objective_history: list[float] = field(default_factory=list, repr=False)


class _Dual:
    """Objective, gradient and Hessian-vector products at one point."""

    def __init__(self, basis: LocalBasis, target: np.ndarray):
        self.basis = basis
        self.target = target

    def evaluate(self, lam: np.ndarray) -> "_DualPoint":
        return _DualPoint(self, lam)


class _DualPoint:
    def __init__(self, dual: _Dual, lam: np.ndarray):
        self.dual = dual
        self.lam = lam
        h = dual.basis.operator(lam)
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        top = w[-1]
        p = np.exp(w - top)
        z = p.sum()
        self.w = w
        self.v = v
        self.p = p / z
        self.log_z = float(top + np.log(z))
        self.value = self.log_z - float(lam @ dual.target)

    @cached_property
    def sigma(self) -> np.ndarray:
        s = (self.v * self.p) @ self.v.conj().T
        return 0.5 * (s + s.conj().T)

    @cached_property
    def moments(self) -> np.ndarray:
        return self.dual.basis.expectations(self.sigma)

    @cached_property
    def grad(self) -> np.ndarray:
        return self.moments - self.dual.target

    @cached_property
    def _kernel(self) -> np.ndarray:
        w, p = self.w, self.p
        dw = w[:, None] - w[None, :]
        hi = np.maximum(p[:, None], p[None, :])
        gap = np.abs(dw)
        with np.errstate(invalid="ignore", divide="ignore"):
            k = hi * (-np.expm1(-gap)) / gap
        return np.where(gap < 1e-12, hi, k)

    def hessp(self, vec: np.ndarray) -> np.ndarray:
        d = self.dual.basis.operator(vec)
        v = self.v
        dt = v.conj().T @ d @ v
        dsigma = v @ (self._kernel * dt) @ v.conj().T
        hv = self.dual.basis.expectations(dsigma)
        return hv - self.moments * float(self.moments @ vec)


def _conjugate_gradient(point: _DualPoint, rhs: np.ndarray, tol: float, max_iters: int) -> np.ndarray:
    """Approximately solve ``H x = rhs``; stop early on nonpositive curvature."""
    x = np.zeros_like(rhs)
    r = rhs.copy()
    d = r.copy()
    rr = float(r @ r)
    stop = tol**2 * rr
    for _ in range(max_iters):
        hd = point.hessp(d)
        curv = float(d @ hd)
        if curv <= 1e-300:
            break
        a = rr / curv
        x += a * d
        r -= a * hd
        rr_new = float(r @ r)
        if rr_new <= stop:
            break
        d = r + (rr_new / rr) * d
        rr = rr_new
    if not np.any(x):
        return rhs.copy()
    return x


def solve(target, level: int, config: SolverConfig | None = None,
          init: np.ndarray | None = None, basis: LocalBasis | None = None) -> MaxEntResult:
    """Maximum-entropy state sharing every ``level``-site marginal with ``target``."""
    config = config or SolverConfig()
    rho = target if isinstance(target, DensityMatrix) else DensityMatrix.from_array(target)
    n = rho.n
    if n > MAX_ORACLE_SITES:
        raise ValueError(f"oracle supports at most {MAX_ORACLE_SITES} sites, got {n}")
    lowest = float(np.linalg.eigvalsh(rho.data)[0])
    if lowest <= 0:
        raise ValueError("target must be full rank; regularize it first")
    basis = basis or LocalBasis(n, level)
    t = basis.expectations(rho.data)

    if level == n:
        # log(target) already lies in the family; read the coefficients off it
        w, v = np.linalg.eigh(rho.data)
        log_rho = (v * np.log(w)) @ v.conj().T
        lam = basis.expectations(log_rho) / basis.norms
        return MaxEntResult(rho, von_neumann_entropy(rho), lam, 0.0, 0)

    dual = _Dual(basis, t)
    lam = np.zeros(basis.size) if init is None else np.array(init, dtype=float)
    point = dual.evaluate(lam)
    history = [point.value]
    it = 0
    while True:
        g = point.grad
        res = float(np.max(np.abs(g)))
        if res <= config.grad_tol:
            break
        if it >= config.max_iters:
            raise ConvergenceError(
                f"dual ascent stopped after {it} iterations with residual {res:.3e}", res, it)
        gnorm = float(np.linalg.norm(g))
        direction = -_conjugate_gradient(point, g, min(0.5, np.sqrt(gnorm)), config.cg_max_iters)
        slope = float(g @ direction)
        if slope >= 0:
            direction = -g
            slope = -gnorm**2
        step = 1.0
        for _ in range(config.max_backtracks):
            trial = dual.evaluate(point.lam + step * direction)
            if trial.value <= point.value + config.armijo * step * slope:
                break
            step *= config.backtrack
        else:
            raise ConvergenceError(
                f"line search failed at iteration {it} (residual {res:.3e})", res, it)
        point = trial
        history.append(point.value)
        it += 1

    sigma = DensityMatrix(point.sigma, n)
    return MaxEntResult(sigma, von_neumann_entropy(sigma), point.lam.copy(), res, it, history)


def regularize(target: DensityMatrix, eps: float) -> DensityMatrix:
    """``(1 - eps) target + eps I / d``."""
    dim = target.dim
    data = (1.0 - eps) * target.data + eps * np.eye(dim) / dim
    return DensityMatrix(data, target.n)


def level_entropies(target: DensityMatrix, config: SolverConfig | None = None,
                    inits: dict[int, np.ndarray] | None = None,
                    bases: dict[int, LocalBasis] | None = None) -> dict[int, MaxEntResult]:
    config = config or SolverConfig()
    results = {}
    for level in range(1, target.n + 1):
        init = (inits or {}).get(level)
        basis = (bases or {}).get(level)
        results[level] = solve(target, level, config, init=init, basis=basis)
    return results


def _spectrum_from_entropies(n: int, ent: dict[int, float]) -> dict[int, float]:
    return {k: ent[k - 1] - ent[k] for k in range(2, n + 1)}


def regularized_spectrum(target, config: SolverConfig | None = None) -> CorrelationSpectrum:
    """Irreducible correlations of ``target`` through full-rank mixtures.

    For each ``eps`` in the schedule the target is mixed with the maximally
    mixed state and every level is solved; the reported values extrapolate the
    two smallest ``eps`` linearly to zero.
    """
    config = config or SolverConfig()
    rho = target if isinstance(target, DensityMatrix) else DensityMatrix.from_array(target)
    n = rho.n
    bases = {k: LocalBasis(n, k) for k in range(1, n)}
    inits: dict[int, np.ndarray] = {}
    per_eps = []
    residuals = {}
    iterations = {}
    for eps in config.epsilon_schedule:
        rho_eps = regularize(rho, eps)
        results = level_entropies(rho_eps, config, inits, bases)
        if config.warm_start:
            inits = {k: r.dual_params for k, r in results.items() if k < n}
        ent = {k: r.entropy for k, r in results.items()}
        values = _spectrum_from_entropies(n, ent)
        tc = total_correlation(rho_eps)
        per_eps.append({
            "eps": eps,
            "values": values,
            "total": tc,
            "telescoping_error": abs(sum(values.values()) - tc),
        })
        residuals[eps] = max(r.residual for r in results.values())
        iterations[eps] = {k: r.iterations for k, r in results.items()}
        log.debug("eps=%g values=%s", eps, values)

    if len(per_eps) >= 2:
        (e1, v1), (e2, v2) = [(p["eps"], p["values"]) for p in per_eps[-2:]]
        extrap = {k: v2[k] - e2 * (v1[k] - v2[k]) / (e1 - e2) for k in v2}
        t1, t2 = per_eps[-2]["total"], per_eps[-1]["total"]
        total = t2 - e2 * (t1 - t2) / (e1 - e2)
    else:
        extrap = dict(per_eps[-1]["values"])
        total = per_eps[-1]["total"]

    meta = {
        "epsilon_sequence": per_eps,
        "max_residual": max(residuals.values()),
        "iterations": {str(e): it for e, it in iterations.items()},
        "max_telescoping_error": max(p["telescoping_error"] for p in per_eps),
    }
    return CorrelationSpectrum(n, extrap, total, "oracle", meta)
