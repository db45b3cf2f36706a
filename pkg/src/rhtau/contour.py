"""Laurent/Fourier calculus on counterclockwise circles centred at the origin.

Every function in the package lives on a :class:`ContourGrid` as an array of
samples whose leading axis runs over the nodes.  Trailing axes are allowed, so
the same routines handle scalar and matrix-valued functions.

Laurent coefficients are stored *normalized* to the circle: the stored value
for exponent ``j`` is ``c_j * r**j``.  This keeps FFT output on the same scale
for any radius and avoids overflow of ``r**-j`` at large ``|j|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import EvaluationError, NearZeroOnContour, PhaseJumpTooLarge

__all__ = [
    "ContourGrid",
    "LaurentSeries",
    "sample_on_grid",
    "laurent_transform",
    "cauchy_project",
    "derivative_along",
    "winding_number",
    "continuous_log",
    "contour_integral",
    "spectral_derivative",
    "cauchy_transform",
    "boundary_value",
]

INTERIOR = "interior"
EXTERIOR = "exterior"


@dataclass(frozen=True)
class ContourGrid:
    """Trapezoidal nodes on the circle ``|z| = radius``, oriented counterclockwise."""

    radius: float
    n_points: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        n = int(self.n_points)
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 2, got {self.n_points}")

    @property
    def center(self) -> complex:
        return 0j

    @cached_property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_points) / self.n_points

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.radius * np.exp(1j * self.angles)

    @cached_property
    def weights(self) -> np.ndarray:
        # quadrature weights for \oint dz
        return 2j * np.pi * self.nodes / self.n_points

    def refined(self, factor: int = 2) -> "ContourGrid":
        return ContourGrid(self.radius, self.n_points * factor)


def sample_on_grid(func: Callable, grid: ContourGrid) -> np.ndarray:
    """Evaluate ``func`` at every node; result has the node axis first.

    ``func`` is tried vectorized first.  If that raises, nodes are evaluated
    one at a time so the failing index can be reported.
    """
    z = grid.nodes
    try:
        values = np.asarray(func(z), dtype=complex)
        if values.shape[:1] != z.shape:
            # constant evaluators may ignore z
            values = np.broadcast_to(values, z.shape + values.shape)
        return np.array(values, dtype=complex)
    except EvaluationError:
        raise
    except Exception:
        pass
    out = []
    for k, zk in enumerate(z):
        try:
            out.append(np.asarray(func(np.array([zk])), dtype=complex)[0])
        except Exception as exc:  # noqa: BLE001 - wrap any evaluator failure
            raise EvaluationError(f"evaluator failed at node {k} (z={zk:.6g}): {exc}", index=k) from exc
    return np.array(out, dtype=complex)


@dataclass(frozen=True)
class LaurentSeries:
    """Truncated Laurent series ``sum_j c_j z^j`` for ``j`` in ``[min_exponent, min_exponent + len)``.

    ``normalized[i]`` holds ``c_j * radius**j`` for ``j = min_exponent + i``.
    """

    normalized: np.ndarray
    min_exponent: int
    radius: float
    radius_of_validity: tuple[float, float] = (0.0, np.inf)

    @property
    def exponents(self) -> np.ndarray:
        return self.min_exponent + np.arange(self.normalized.shape[0])

    @property
    def coefficients(self) -> dict[int, np.ndarray]:
        return {int(j): self.coefficient(int(j)) for j in self.exponents}

    def coefficient(self, j: int):
        i = j - self.min_exponent
        if i < 0 or i >= self.normalized.shape[0]:
            return np.zeros(self.normalized.shape[1:], dtype=complex)[()]
        return self.normalized[i] * float(self.radius) ** (-j)

    def evaluate(self, z) -> np.ndarray:
        """Direct summation; intended for points near the reference circle."""
        z = np.asarray(z, dtype=complex)
        ratio = z.reshape(-1) / self.radius
        powers = ratio[:, None] ** self.exponents[None, :]
        flat = self.normalized.reshape(self.normalized.shape[0], -1)
        vals = powers @ flat
        return vals.reshape(z.shape + self.normalized.shape[1:])

    def to_samples(self, grid: ContourGrid) -> np.ndarray:
        """Values at the nodes of ``grid`` (same radius required), with alias folding."""
        n = grid.n_points
        if not np.isclose(grid.radius, self.radius):
            return self.evaluate(grid.nodes)
        folded = np.zeros((n,) + self.normalized.shape[1:], dtype=complex)
        np.add.at(folded, self.exponents % n, self.normalized)
        return np.fft.ifft(folded, axis=0) * n

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        if self.min_exponent != other.min_exponent or self.normalized.shape != other.normalized.shape:
            raise ValueError("series must share exponent range")
        return LaurentSeries(self.normalized + other.normalized, self.min_exponent, self.radius,
                             self.radius_of_validity)


def laurent_transform(samples, grid: ContourGrid) -> LaurentSeries:
    """Laurent coefficients ``c_j = (1/n) sum_k s_k z_k^{-j}`` for ``-n/2 <= j < n/2``."""
    s = np.asarray(samples, dtype=complex)
    n = grid.n_points
    if s.shape[0] != n:
        raise ValueError(f"expected {n} samples, got {s.shape[0]}")
    fhat = np.fft.fft(s, axis=0) / n
    normalized = np.fft.fftshift(fhat, axes=0)
    return LaurentSeries(normalized, -n // 2, grid.radius)


def cauchy_project(series: LaurentSeries, side: str) -> LaurentSeries:
    """Keep exponents ``j >= 0`` (interior) or ``j < 0`` (exterior)."""
    if side not in (INTERIOR, EXTERIOR):
        raise ValueError(f"side must be {INTERIOR!r} or {EXTERIOR!r}")
    keep = series.exponents >= 0 if side == INTERIOR else series.exponents < 0
    mask = keep.reshape((-1,) + (1,) * (series.normalized.ndim - 1))
    return LaurentSeries(np.where(mask, series.normalized, 0), series.min_exponent,
                         series.radius, series.radius_of_validity)


def derivative_along(series: LaurentSeries) -> LaurentSeries:
    """Termwise z-derivative; exponent range shifts down by one."""
    j = series.exponents.reshape((-1,) + (1,) * (series.normalized.ndim - 1))
    return LaurentSeries(j * series.normalized / series.radius, series.min_exponent - 1,
                         series.radius, series.radius_of_validity)


def spectral_derivative(samples, grid: ContourGrid) -> np.ndarray:
    """d/dz of sampled analytic data, returned at the same nodes.

    The Nyquist mode is dropped: it has no well-defined derivative.
    """
    s = np.asarray(samples, dtype=complex)
    n = grid.n_points
    fhat = np.fft.fft(s, axis=0)
    j = np.fft.fftfreq(n, 1.0 / n)
    j[n // 2] = 0
    shape = (-1,) + (1,) * (s.ndim - 1)
    dtheta = np.fft.ifft(1j * j.reshape(shape) * fhat, axis=0)
    # d/dz = (1 / (i z)) d/dtheta on the circle
    return dtheta / (1j * grid.nodes.reshape(shape))


def contour_integral(samples, grid: ContourGrid):
    """Trapezoidal ``\\oint f(z) dz`` over the grid circle."""
    s = np.asarray(samples, dtype=complex)
    w = grid.weights.reshape((-1,) + (1,) * (s.ndim - 1))
    return np.sum(w * s, axis=0)


def _phase_increments(samples: np.ndarray) -> np.ndarray:
    s = np.asarray(samples, dtype=complex)
    return np.angle(np.roll(s, -1) / s)


def winding_number(samples, tol: float | None = None) -> int:
    """Winding number about 0 of the closed sampled curve.

    ``tol`` defaults to ``1e-10 * max|samples|``.
    """
    s = np.asarray(samples, dtype=complex).reshape(-1)
    amp = np.abs(s)
    if tol is None:
        tol = 1e-10 * amp.max() if amp.size else 0.0
    if amp.size == 0 or amp.min() <= tol:
        raise NearZeroOnContour(f"samples come within {amp.min() if amp.size else 0:.3g} of zero")
    dphi = _phase_increments(s)
    if np.max(np.abs(dphi)) >= np.pi / 2:
        raise PhaseJumpTooLarge(
            f"phase increment {np.max(np.abs(dphi)):.3f} rad between nodes; refine the grid")
    return int(np.rint(dphi.sum() / (2 * np.pi)))


def continuous_log(samples, index: int, grid: ContourGrid) -> np.ndarray:
    """Single-valued branch of ``log(samples / z^index)`` along the grid.

    The branch is fixed so that the value at node 0 has imaginary part in
    ``(-pi, pi]``.
    """
    s = np.asarray(samples, dtype=complex).reshape(-1)
    winding_number(s)
    g = s / grid.nodes ** index
    dphi = _phase_increments(g)
    if abs(dphi.sum()) > np.pi:
        raise ValueError(f"index {index} does not match the winding of the samples")
    phase = np.angle(g[0]) + np.concatenate(([0.0], np.cumsum(dphi[:-1])))
    return np.log(np.abs(g)) + 1j * phase


def cauchy_transform(samples, grid: ContourGrid, z, side: str | None = None) -> np.ndarray:
    """``\\oint_grid phi(w) / (w - z) dw / (2 pi i)`` at points ``z``.

    On the circle itself pass ``side`` to get the Plemelj boundary value.
    Far from the circle the trapezoidal sum is used; close to it the
    Laurent projection is summed instead since the quadrature degrades.
    """
    phi = np.asarray(samples, dtype=complex)
    z = np.asarray(z, dtype=complex)
    flat_z = z.reshape(-1)
    tail = phi.shape[1:]
    out = np.empty((flat_z.size,) + tail, dtype=complex)
    series = laurent_transform(phi, grid)
    r = grid.radius
    n = grid.n_points
    mod = np.abs(flat_z)
    ratio = np.where(mod < r, mod / r, r / np.maximum(mod, 1e-300))
    if side is not None:
        near = np.ones(flat_z.size, dtype=bool)
        inside = np.full(flat_z.size, side == INTERIOR)
    else:
        # trapezoidal error ~ ratio**n
        near = ratio ** n > 1e-16
        inside = mod < r
    far = ~near
    if far.any():
        w = grid.weights
        kern = w[None, :] / (grid.nodes[None, :] - flat_z[far, None]) / (2j * np.pi)
        out[far] = np.tensordot(kern, phi, axes=(1, 0))
    if near.any():
        plus = cauchy_project(series, INTERIOR)
        minus = cauchy_project(series, EXTERIOR)
        zi = flat_z[near]
        vals_in = plus.evaluate(zi)
        vals_out = -minus.evaluate(zi)
        sel = inside[near].reshape((-1,) + (1,) * len(tail))
        out[near] = np.where(sel, vals_in, vals_out)
    return out.reshape(z.shape + tail)


def boundary_value(samples, grid: ContourGrid, side: str) -> np.ndarray:
    """Plemelj boundary value of the Cauchy transform at the grid's own nodes."""
    series = laurent_transform(samples, grid)
    if side == INTERIOR:
        return cauchy_project(series, INTERIOR).to_samples(grid)
    return -cauchy_project(series, EXTERIOR).to_samples(grid)
