"""Finite sections of block Toeplitz operators on the row-vector Hardy space.

Row vectors ``f = sum_i f_i z^i`` are acted on from the right,
``T_S f = P_+[f S]``, so the coefficient map is ``(T f)_j = sum_i f_i S_{j-i}``.
As a matrix acting on the right of the coefficient row vector, block
``(i, j)`` is ``S_{j-i}``.  With this convention ``T_A T_B`` (first ``A``,
then ``B``) is the matrix product ``T(A) @ T(B)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contour import ContourGrid, continuous_log, laurent_transform, winding_number
from .errors import MiddleFactorSingular, NoConvergence, NonzeroIndexB
from .iiks import szego_exponent
from .symbol import SymbolFamily

__all__ = [
    "ToeplitzSection",
    "toeplitz_section",
    "section_of_product",
    "solvability_proxy",
    "cocycle",
    "szego_det",
    "moment_solvability",
]


def _as_blocks(samples) -> np.ndarray:
    s = np.asarray(samples, dtype=complex)
    if s.ndim == 1:
        s = s[:, None, None]
    return s


@dataclass(frozen=True)
class ToeplitzSection:
    """``m x m`` block truncation of the Toeplitz matrix of a symbol."""

    matrix: np.ndarray = field(repr=False)
    m: int
    block: int

    def smallest_singular_value(self) -> float:
        if self.matrix.size == 0:
            return 1.0
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])

    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))


def toeplitz_section(samples, m: int, grid: ContourGrid | None = None) -> ToeplitzSection:
    """Section with block ``(i, j)`` equal to the Fourier block ``S_{j-i}``.

    ``samples`` are symbol values at the nodes of ``grid`` (default: the unit
    circle with as many nodes as samples).  The grid should carry at least
    ``2 m`` nodes so the needed coefficients are not aliased.
    """
    s = _as_blocks(samples)
    grid = grid or ContourGrid(1.0, s.shape[0])
    series = laurent_transform(s, grid)
    n = s.shape[-1]
    idx = np.arange(m)
    diff = idx[None, :] - idx[:, None]
    blocks = np.stack([series.coefficient(int(k)) for k in range(-(m - 1), m)])
    full = blocks[diff + m - 1]  # (m, m, n, n)
    return ToeplitzSection(full.transpose(0, 2, 1, 3).reshape(m * n, m * n), m, n)


def _grid_for(m: int, inner: int | None = None) -> tuple[int, ContourGrid]:
    inner = inner or 2 * m
    n_fft = 1 << int(np.ceil(np.log2(max(4 * inner, 64))))
    return inner, ContourGrid(1.0, n_fft)


def section_of_product(left, right, m: int, inner: int | None = None) -> np.ndarray:
    """``P_m T_left T_right P_m`` using an inner truncation for the intermediate space.

    ``left`` and ``right`` are callables ``z -> samples``.
    """
    inner, grid = _grid_for(m, inner)
    block = _as_blocks(left(grid.nodes)).shape[-1]
    tl = toeplitz_section(left(grid.nodes), inner, grid).matrix
    tr = toeplitz_section(right(grid.nodes), inner, grid).matrix
    k = m * block
    return tl[:k, :] @ tr[:, :k]


def solvability_proxy(family: SymbolFamily, t=None, m: int = 32, m_max: int = 512, rtol: float = 0.05,
                      floor: float = 1e-12) -> dict:
    """Smallest singular value of the section of ``M^{-1}``, doubling ``m`` until it settles.

    Values below ``floor`` count as settled (the section is numerically singular).
    """
    t = family.params(t)
    history = []
    prev = None
    while m <= m_max:
        _, grid = _grid_for(m)
        s = np.linalg.inv(family(grid.nodes, t))
        val = toeplitz_section(s, m, grid).smallest_singular_value()
        history.append((m, val))
        if prev is not None and (abs(val - prev) <= rtol * max(val, prev) or max(val, prev) < floor):
            return {"value": val, "m": m, "history": history}
        prev = val
        m *= 2
    raise NoConvergence(f"solvability proxy did not settle by m = {m_max}: {history[-2:]}")


def cocycle(m_left, m_right, m: int = 64, inner: int | None = None, rtol: float = 1e-6,
            m_max: int = 256) -> dict:
    """``det(T_{M^{-1}} T_{N^{-1}} T_{(M N)^{-1}}^{-1})`` by finite sections, doubling ``m`` to ``rtol``.

    ``m_left``, ``m_right`` are callables ``z -> (..., n, n)`` (or scalar) samples.
    """
    inv = lambda f: (lambda z: np.linalg.inv(_as_blocks(f(z))))
    s1, s2 = inv(m_left), inv(m_right)
    prod = lambda z: s2(z) @ s1(z)  # (M N)^{-1}
    history = []
    prev = None
    while True:
        # operator T_{S1} T_{S2} applies T_{S2} first: matrix T(S2) @ T(S1)
        num = np.linalg.det(section_of_product(s2, s1, m, inner))
        _, grid = _grid_for(m, inner)
        den_sec = toeplitz_section(prod(grid.nodes), m, grid)
        if den_sec.smallest_singular_value() < 1e-12:
            raise MiddleFactorSingular(f"section of (M N)^(-1) is singular at m = {m}")
        val = complex(num / den_sec.det())
        history.append((m, val))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return {"value": val, "m": m, "history": history}
        if 2 * m > m_max:
            if prev is None:
                return {"value": val, "m": m, "history": history}
            raise NoConvergence(f"cocycle did not settle by m = {m_max}: {history[-2:]}")
        prev = val
        m *= 2


def szego_det(b, m: int = 64, inner: int | None = None, n_points: int = 512) -> dict:
    """Finite-section ``det T_b T_{1/b}`` next to the coefficient formula.

    ``b`` is a callable on the unit circle.  Returns ``value`` (the section
    determinant), ``formula`` (``exp sum_{j>0} j beta_{-j} beta_j``) and the
    exponent itself.
    """
    grid = ContourGrid(1.0, n_points)
    bs = np.asarray(b(grid.nodes), dtype=complex)
    ind = winding_number(bs)
    if ind != 0:
        raise NonzeroIndexB(f"ind b = {ind}; need 0")
    exponent = szego_exponent(laurent_transform(continuous_log(bs, 0, grid), grid))
    sec = section_of_product(b, lambda z: 1 / np.asarray(b(z), dtype=complex), m, inner)
    return {"value": complex(np.linalg.det(sec)), "formula": complex(np.exp(exponent)),
            "exponent": exponent, "m": m}


def moment_solvability(mu, n: int, n_points: int = 256, radius: float = 1.0) -> complex:
    """``det[oint z^(l + j) mu(z) dz]_{l, j < n}`` by trapezoidal quadrature."""
    grid = ContourGrid(radius, n_points)
    vals = np.asarray(mu(grid.nodes), dtype=complex)
    moments = [complex(np.sum(grid.weights * grid.nodes ** k * vals)) for k in range(2 * n - 1)]
    hankel = np.array([[moments[i + j] for j in range(n)] for i in range(n)])
    return complex(np.linalg.det(hankel)) if n else 1.0 + 0j
