"""Integrable kernel on nested circles, its Fredholm determinant and the RHP solution.

On ``Sigma_nu`` the kernel vectors are ``f = e_{j_nu} a_nu`` and ``g = e_{k_nu}``,
so ``K(z, w) = f(z)^T g(w) / (2 pi i (w - z))`` vanishes whenever ``z`` and
``w`` sit on the same circle.  The Nystrom matrix is ``sqrt(w) K sqrt(w)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .contour import (
    EXTERIOR,
    INTERIOR,
    ContourGrid,
    boundary_value,
    cauchy_transform,
    continuous_log,
    laurent_transform,
    sample_on_grid,
    winding_number,
)
from .errors import NoConvergence, NonzeroIndexB, OnDivisor
from .factor import FactorChain

__all__ = [
    "IiksSystem",
    "FredholmResult",
    "IiksSolution",
    "TriangularSolution",
    "build_system",
    "fredholm_det",
    "solve_theta",
    "explicit_triangular",
    "szego_exponent",
]

ON_DIVISOR = 1e-10


@dataclass(frozen=True)
class IiksSystem:
    """Discretized kernel vectors and the symmetrized Nystrom matrix."""

    chain: FactorChain
    n_points: int
    grids: tuple[ContourGrid, ...]
    entries: np.ndarray = field(repr=False)  # (R, n) samples of a_nu on its own circle
    nystrom: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nystrom.shape[0]

    @property
    def labels(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.grids)), self.n_points)

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([g.nodes for g in self.grids]) if self.grids else np.zeros(0, complex)

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([g.weights for g in self.grids]) if self.grids else np.zeros(0, complex)

    def f_vectors(self) -> np.ndarray:
        """``f`` at every node, shape ``(N, dim)``."""
        out = np.zeros((self.size, self.chain.dim), dtype=complex)
        out[np.arange(self.size), np.asarray(self.chain.rows, int)[self.labels]] = self.entries.reshape(-1)
        return out

    def kernel(self) -> np.ndarray:
        """Unweighted ``K(z_i, z_j)``, zero on same-contour blocks."""
        sw = np.sqrt(self.weights)
        return self.nystrom / sw[:, None] / sw[None, :]


def build_system(chain: FactorChain, n_points: int = 256) -> IiksSystem:
    if len(chain) and chain.radii is None:
        raise ValueError("assign contours before building the kernel")
    grids = tuple(ContourGrid(r, n_points) for r in (chain.radii or ()))
    R = len(grids)
    if R == 0:
        return IiksSystem(chain, n_points, grids, np.zeros((0, n_points), complex), np.zeros((0, 0), complex))
    entries = np.stack([chain.entries(g.nodes)[nu] for nu, g in enumerate(grids)])
    z = np.concatenate([g.nodes for g in grids])
    w = np.concatenate([g.weights for g in grids])
    lab = np.repeat(np.arange(R), n_points)
    rows = np.asarray(chain.rows)[lab]
    cols = np.asarray(chain.cols)[lab]
    a = entries.reshape(-1)
    couple = (rows[:, None] == cols[None, :]) & (lab[:, None] != lab[None, :])
    diff = np.where(couple, z[None, :] - z[:, None], 1.0)
    kmat = np.where(couple, a[:, None] / (2j * np.pi * diff), 0.0)
    sw = np.sqrt(w)
    return IiksSystem(chain, n_points, grids, entries, sw[:, None] * kmat * sw[None, :])


def _det(system: IiksSystem) -> complex:
    if system.size == 0:
        return 1.0 + 0j
    sign, logabs = np.linalg.slogdet(np.eye(system.size) - system.nystrom)
    return complex(sign * np.exp(logabs))


@dataclass(frozen=True)
class FredholmResult:
    value: complex
    n_points: int
    converged: bool
    on_divisor: bool
    rel_change: float
    system: IiksSystem = field(repr=False)
    history: tuple = field(default=(), repr=False)

    def __complex__(self):
        return complex(self.value)


MAX_SIZE = 4096


def fredholm_det(chain_or_system, n_points: int | None = None, tol: float = 1e-8,
                 n_max: int = 4096, on_divisor: float = ON_DIVISOR, max_size: int = MAX_SIZE) -> FredholmResult:
    """``det(1 - K)``, doubling every grid until two successive values agree to ``tol``.

    Refinement also stops once the Nystrom matrix would exceed ``max_size``
    rows, which bounds memory when many contours are needed.
    """
    system = chain_or_system if isinstance(chain_or_system, IiksSystem) else \
        build_system(chain_or_system, n_points or 128)
    chain = system.chain
    if system.size == 0:
        return FredholmResult(1.0 + 0j, system.n_points, True, False, 0.0, system, ((system.n_points, 1.0),))
    prev = _det(system)
    history = [(system.n_points, prev)]
    n = system.n_points
    while 2 * n <= n_max and 2 * n * len(system.grids) <= max_size:
        n *= 2
        finer = build_system(chain, n)
        cur = _det(finer)
        history.append((n, cur))
        change = abs(cur - prev) / max(abs(cur), 1e-300)
        if abs(cur) < on_divisor and abs(prev) < on_divisor:
            return FredholmResult(cur, n, True, True, change, finer, tuple(history))
        if change <= tol:
            return FredholmResult(cur, n, True, abs(cur) < on_divisor, change, finer, tuple(history))
        prev, system = cur, finer
    raise NoConvergence(f"tau did not settle to {tol:g} by n = {n} on {len(system.grids)} contours; "
                        f"last values {history[-2:]}")


@dataclass(frozen=True)
class IiksSolution:
    """Solution ``F`` of ``(1 - K) F = f`` and the piecewise analytic ``Theta`` built from it."""

    system: IiksSystem
    tau: complex
    density: np.ndarray = field(repr=False)  # (N, dim)

    @property
    def grid(self) -> ContourGrid:
        return self.system.grids[0] if self.system.grids else ContourGrid(1.0, self.system.n_points)

    def _block(self, mu: int) -> np.ndarray:
        n = self.system.n_points
        return self.density[mu * n:(mu + 1) * n]

    def theta(self, z) -> np.ndarray:
        """``Theta(z)`` at points off the contours, shape ``z.shape + (n, n)``."""
        z = np.asarray(z, dtype=complex)
        dim = self.system.chain.dim
        out = np.broadcast_to(np.eye(dim, dtype=complex), z.shape + (dim, dim)).copy()
        for mu, g in enumerate(self.system.grids):
            k = self.system.chain.cols[mu]
            out[..., :, k] += cauchy_transform(self._block(mu), g, z)
        return out

    def boundary(self, nu: int, side: str) -> np.ndarray:
        """Boundary values of ``Theta`` at the nodes of ``Sigma_nu`` (0-based).

        ``exterior`` is the limit from the region outside the circle.
        """
        dim = self.system.chain.dim
        g = self.system.grids[nu]
        out = np.broadcast_to(np.eye(dim, dtype=complex), (g.n_points, dim, dim)).copy()
        for mu, gm in enumerate(self.system.grids):
            k = self.system.chain.cols[mu]
            if mu == nu:
                out[:, :, k] += boundary_value(self._block(mu), gm, side)
            else:
                out[:, :, k] += cauchy_transform(self._block(mu), gm, g.nodes)
        return out

    @property
    def gamma_minus(self) -> np.ndarray:
        if not self.system.grids:
            return np.broadcast_to(np.eye(self.system.chain.dim, dtype=complex),
                                   (self.system.n_points,) + (self.system.chain.dim,) * 2).copy()
        return self.boundary(0, EXTERIOR)

    @property
    def gamma_plus(self) -> np.ndarray:
        chain = self.system.chain
        return self.gamma_minus @ chain.family(self.grid.nodes, chain.t)

    def jump_residual(self) -> float:
        worst = 0.0
        mats = [self.system.chain.matrices(g.nodes)[nu] for nu, g in enumerate(self.system.grids)]
        for nu, f in enumerate(mats):
            res = self.boundary(nu, INTERIOR) - self.boundary(nu, EXTERIOR) @ f
            worst = max(worst, float(np.max(np.abs(res))))
        return worst

    def normalization_residual(self, radius: float = 1e3, n_probe: int = 16) -> float:
        z = radius * np.exp(2j * np.pi * np.arange(n_probe) / n_probe)
        return float(np.max(np.abs(self.theta(z) - np.eye(self.system.chain.dim))))


def solve_theta(source, on_divisor: float = ON_DIVISOR, **kwargs) -> IiksSolution:
    """Resolve ``(1 - K) F = f``; refuses near the divisor.

    ``source`` may be a chain (refined by :func:`fredholm_det`), a finished
    :class:`FredholmResult`, or an :class:`IiksSystem` used on its own grid.
    """
    if isinstance(source, IiksSystem):
        system, value = source, _det(source)
    else:
        res = source if isinstance(source, FredholmResult) else fredholm_det(source, **kwargs)
        system, value = res.system, res.value
    if abs(value) <= on_divisor:
        raise OnDivisor(f"|tau| = {abs(value):.3g} is on the divisor")
    if system.size == 0:
        return IiksSolution(system, value, np.zeros((0, system.chain.dim), complex))
    sw = np.sqrt(system.weights)
    rhs = sw[:, None] * system.f_vectors()
    dens = np.linalg.solve(np.eye(system.size) - system.nystrom, rhs) / sw[:, None]
    return IiksSolution(system, value, dens)


def szego_exponent(beta_series) -> complex:
    """``sum_{j>0} j beta_{-j} beta_j`` from a Laurent series of ``log b``."""
    top = -beta_series.min_exponent
    return complex(sum(j * beta_series.coefficient(-j) * beta_series.coefficient(j) for j in range(1, top)))


@dataclass(frozen=True)
class TriangularSolution:
    """Closed-form solution for ``M = [[a, b], [-1/b, 0]]`` with ``ind b = 0``."""

    grid: ContourGrid
    beta: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    tau: complex

    @property
    def _phi(self):
        return self.a * self.b * np.exp(2 * boundary_value(self.beta, self.grid, EXTERIOR))

    @staticmethod
    def _assemble(bz, yz, inner):
        out = np.zeros(np.shape(bz) + (2, 2), dtype=complex)
        out[..., 0, 0] = np.exp(bz)
        out[..., 0, 1] = -np.exp(-bz) * yz
        out[..., 1, 1] = np.exp(-bz)
        if inner is not None:
            jm = np.array([[0, 1], [-1, 0]], dtype=complex)
            out = np.where(inner[..., None, None], out @ jm, out)
        return out

    def theta(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        bz = cauchy_transform(self.beta, self.grid, z)
        yz = cauchy_transform(self._phi, self.grid, z)
        return self._assemble(bz, yz, np.abs(z) < self.grid.radius)

    def _boundary(self, side):
        bz = boundary_value(self.beta, self.grid, side)
        yz = boundary_value(self._phi, self.grid, side)
        inner = np.full(bz.shape, side == INTERIOR)
        return self._assemble(bz, yz, inner)

    @property
    def gamma_minus(self) -> np.ndarray:
        return self._boundary(EXTERIOR)

    @property
    def gamma_plus(self) -> np.ndarray:
        return self._boundary(INTERIOR)

    def symbol(self) -> np.ndarray:
        out = np.zeros((self.grid.n_points, 2, 2), dtype=complex)
        out[:, 0, 0] = self.a
        out[:, 0, 1] = self.b
        out[:, 1, 0] = -1 / self.b
        return out

    def jump_residual(self) -> float:
        return float(np.max(np.abs(self.gamma_plus - self.gamma_minus @ self.symbol())))


def explicit_triangular(a: Callable, b: Callable, n_points: int = 256, radius: float = 1.0) -> TriangularSolution:
    """Closed-form ``Gamma`` for ``M = [[a, b], [-1/b, 0]]`` via the Cauchy split of ``log b``."""
    grid = ContourGrid(radius, n_points)
    bs = sample_on_grid(b, grid)
    ind = winding_number(bs)
    if ind != 0:
        raise NonzeroIndexB(f"ind b = {ind}; need 0")
    beta = continuous_log(bs, 0, grid)
    tau = np.exp(szego_exponent(laurent_transform(beta, grid)))
    return TriangularSolution(grid, beta, sample_on_grid(a, grid), bs, complex(tau))
