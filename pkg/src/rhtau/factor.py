"""Chains of elementary factors ``1 + a(z) E_jk`` reproducing an SL_n symbol.

A :class:`FactorChain` does not store sampled entries.  It stores an
*entry map*: plain arithmetic taking the symbol's entries to the list of
factor entries.  Evaluating the map on numpy arrays gives ``a_nu(z)``;
evaluating it on :class:`~rhtau._dual.Dual` numbers gives their exact
derivatives along any perturbation of the symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import _dual
from .contour import ContourGrid, winding_number
from .errors import CannotSeparate, CaseNotAdmissible, NearZeroOnContour, ZeroOnContour
from .symbol import (
    SymbolFamily,
    choose_pivot_permutation,
    locate_zeros,
    param_derivative,
    probe_radii,
)

__all__ = [
    "ElementaryFactor",
    "FactorChain",
    "lulu_factors",
    "permutation_factors",
    "signed_permutation",
    "lemma_factorize",
    "sl2_factorize",
    "default_sl2_chain",
    "factorize",
    "assign_contours",
    "uniform_radii",
    "chain_poles",
]

POLE_CLEARANCE = 1e-3


@dataclass(frozen=True)
class ElementaryFactor:
    """``F = 1 + entry(z) E_{row, col}`` with ``row != col``."""

    row: int
    col: int
    entry: Callable[[np.ndarray], np.ndarray]
    radius: float | None = None

    def __post_init__(self):
        if self.row == self.col:
            raise ValueError("elementary factors need row != col")

    def matrix(self, z, dim: int = 2) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.broadcast_to(np.eye(dim, dtype=complex), z.shape + (dim, dim)).copy()
        out[..., self.row, self.col] += np.broadcast_to(np.asarray(self.entry(z), dtype=complex), z.shape)
        return out


def _lulu_entries(x):
    """Entries of the LULU identity ``diag(x, 1/x) = L U L U``."""
    return [(1 - x) / x, 1.0, x - 1, -1 / x]


def lulu_factors(x: Callable[[np.ndarray], np.ndarray], i: int = 0, j: int = 1) -> list[ElementaryFactor]:
    """Four factors whose product is ``diag(x, 1/x)`` embedded on indices ``(i, j)``."""
    pos = [(j, i), (i, j), (j, i), (i, j)]
    out = []
    for k, (r, c) in enumerate(pos):
        def entry(z, k=k):
            z = np.asarray(z, dtype=complex)
            xv = np.asarray(x(z), dtype=complex)
            if np.any(xv == 0):
                raise ZeroOnContour("x vanishes in the LULU identity")
            vals = _lulu_entries(xv)
            return np.broadcast_to(np.asarray(vals[k], dtype=complex), z.shape)
        out.append(ElementaryFactor(r, c, entry))
    return out


def _transpositions(perm: Sequence[int]) -> list[tuple[int, int]]:
    """Transpositions ``T_1..T_s`` with ``Q^T = T_s ... T_1`` where ``Q = I[:, perm]``."""
    n = len(perm)
    target = np.eye(n)[:, list(perm)].T
    remaining = target.copy()
    out = []
    for i in range(n):
        if remaining[i, i] != 1:
            j = int(np.flatnonzero(remaining[i])[0])
            remaining[:, [i, j]] = remaining[:, [j, i]]
            out.append((i, j))
    return out


def permutation_factors(perm: Sequence[int]) -> list[ElementaryFactor]:
    """Constant factors whose product is ``I[:, perm]^T`` up to signs, with determinant 1.

    Each transposition ``(i j)`` becomes ``(1 + E_ji)(1 - E_ij)(1 + E_ji)``.
    """
    out = []
    for i, j in reversed(_transpositions(perm)):
        for r, c, v in ((j, i, 1.0), (i, j, -1.0), (j, i, 1.0)):
            out.append(ElementaryFactor(r, c, lambda z, v=v: np.full(np.shape(z), v, dtype=complex)))
    return out


def signed_permutation(perm: Sequence[int]) -> np.ndarray:
    """The matrix product of :func:`permutation_factors`."""
    n = len(perm)
    p = np.eye(n, dtype=complex)
    for f in permutation_factors(perm):
        p = p @ f.matrix(np.array(0j), n)
    return p


def _entries_of(mz):
    n = mz.shape[-1]
    return [[mz[..., r, c] for c in range(n)] for r in range(n)]


def _dual_entries(mz, dmz):
    n = mz.shape[-1]
    return [[_dual.Dual(mz[..., r, c], dmz[..., r, c]) for c in range(n)] for r in range(n)]


@dataclass(frozen=True)
class FactorChain:
    """Ordered elementary factors ``F_1 ... F_R`` of ``family`` at parameters ``t``.

    ``entry_map`` takes the symbol entries (a nested list, arrays or duals)
    to the list of factor entries; ``denominator_map`` gives the scalar
    functions whose zeros are the only possible poles of those entries.
    """

    dim: int
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    entry_map: Callable = field(repr=False)
    family: SymbolFamily = field(repr=False)
    t: np.ndarray = field(repr=False)
    case: str = "LemmaGeneral"
    radii: tuple[float, ...] | None = None
    denominator_map: Callable | None = field(default=None, repr=False)
    permutation: tuple[int, ...] = ()

    def __len__(self):
        return len(self.rows)

    def at(self, t) -> "FactorChain":
        """Same factor structure and contours at other parameters."""
        return replace(self, t=self.family.params(t))

    def with_radii(self, radii) -> "FactorChain":
        radii = tuple(float(r) for r in radii)
        if len(radii) != len(self):
            raise ValueError(f"need {len(self)} radii, got {len(radii)}")
        return replace(self, radii=radii)

    def _broadcast(self, vals, shape):
        return np.stack([np.broadcast_to(np.asarray(_dual.value(v), dtype=complex), shape) for v in vals]) \
            if vals else np.zeros((0,) + shape, dtype=complex)

    def entries(self, z) -> np.ndarray:
        """``a_nu(z)`` for every factor, shape ``(R,) + z.shape``."""
        z = np.asarray(z, dtype=complex)
        vals = self.entry_map(_entries_of(self.family(z, self.t)))
        return self._broadcast(vals, z.shape)

    def entry_tangents(self, z, dm) -> np.ndarray:
        """Exact derivative of the entries along a perturbation ``dm`` of the symbol samples."""
        z = np.asarray(z, dtype=complex)
        vals = self.entry_map(_dual_entries(self.family(z, self.t), dm))
        return np.stack([np.broadcast_to(_dual.tangent(v) if isinstance(v, _dual.Dual)
                                         else np.zeros(z.shape, complex), z.shape) for v in vals]) \
            if vals else np.zeros((0,) + z.shape, dtype=complex)

    def entry_derivatives(self, z, i: int) -> np.ndarray:
        """``d a_nu / d t_i``."""
        return self.entry_tangents(z, param_derivative(self.family, z, self.t, i))

    def denominators(self, z) -> list[np.ndarray]:
        if self.denominator_map is None:
            return []
        z = np.asarray(z, dtype=complex)
        return [np.broadcast_to(np.asarray(v, dtype=complex), z.shape)
                for v in self.denominator_map(_entries_of(self.family(z, self.t)))]

    def matrices(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        a = self.entries(z)
        out = np.broadcast_to(np.eye(self.dim, dtype=complex),
                              (len(self),) + z.shape + (self.dim, self.dim)).copy()
        for nu, (r, c) in enumerate(zip(self.rows, self.cols)):
            out[nu, ..., r, c] += a[nu]
        return out

    def product(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.broadcast_to(np.eye(self.dim, dtype=complex), z.shape + (self.dim, self.dim)).copy()
        for f in self.matrices(z):
            out = out @ f
        return out

    def partial_products(self, z) -> np.ndarray:
        """``F_1 ... F_k`` for ``k = 0..R``; shape ``(R + 1,) + z.shape + (n, n)``."""
        z = np.asarray(z, dtype=complex)
        cur = np.broadcast_to(np.eye(self.dim, dtype=complex), z.shape + (self.dim, self.dim)).copy()
        out = [cur]
        for f in self.matrices(z):
            cur = cur @ f
            out.append(cur)
        return np.stack(out)

    @property
    def factors(self) -> list[ElementaryFactor]:
        radii = self.radii or (None,) * len(self)
        return [ElementaryFactor(r, c, (lambda z, nu=nu: self.entries(z)[nu]), rad)
                for nu, (r, c, rad) in enumerate(zip(self.rows, self.cols, radii))]

    def reconstruction_residual(self, n_points: int = 512, radius: float = 1.0) -> float:
        z = ContourGrid(radius, n_points).nodes
        return float(np.max(np.abs(self.product(z) - self.family(z, self.t))))

    def report(self, n_coeffs: int = 8, n_points: int = 64) -> dict:
        """Serializable summary: factor positions, radii and leading Laurent coefficients."""
        rows = []
        for nu, (r, c) in enumerate(zip(self.rows, self.cols)):
            rad = self.radii[nu] if self.radii else 1.0
            g = ContourGrid(rad, n_points)
            a = self.entries(g.nodes)[nu]
            coeffs = np.fft.fft(a) / n_points
            js = list(range(-n_coeffs, n_coeffs + 1))
            laurent = {str(j): [float((coeffs[j % n_points] * rad ** -j).real),
                                float((coeffs[j % n_points] * rad ** -j).imag)] for j in js}
            rows.append({"index": nu + 1, "row": r + 1, "col": c + 1, "radius": float(rad),
                         "laurent": laurent})
        return {"case": self.case, "dim": self.dim, "factors": rows}


def _pruned(chain: FactorChain, keep_groups) -> FactorChain:
    base = chain.entry_map
    keep = [i for grp in keep_groups for i in grp]
    return replace(chain, rows=tuple(chain.rows[i] for i in keep), cols=tuple(chain.cols[i] for i in keep),
                   entry_map=lambda m: [base(m)[i] for i in keep])


def _is_trivial(chain: FactorChain, idx: Sequence[int], n_probe: int = 64, tol: float = 1e-14) -> bool:
    """True if the listed factors multiply to the identity for all nearby parameters."""
    z = ContourGrid(1.0, n_probe).nodes
    mz = chain.family(z, chain.t)
    sub = replace(chain, rows=tuple(chain.rows[i] for i in idx), cols=tuple(chain.cols[i] for i in idx),
                  entry_map=lambda m: [chain.entry_map(m)[i] for i in idx])
    ident = np.eye(chain.dim)
    if np.max(np.abs(sub.product(z) - ident)) > tol * max(1.0, np.max(np.abs(mz))):
        return False
    for i in range(chain.family.param_dim):
        tang = sub.entry_derivatives(z, i)
        if np.max(np.abs(tang), initial=0.0) > tol * max(1.0, np.max(np.abs(mz))):
            return False
    return True


def lemma_factorize(family: SymbolFamily, t=None, perm: Sequence[int] | None = None) -> FactorChain:
    """General SL_n chain ``L . D . U . P`` with the diagonal part expanded by LULU blocks.

    Factor groups that are the identity at (and to first order around) ``t``
    are dropped, so e.g. an already-elementary symbol yields a single factor.
    """
    t = family.params(t)
    n = family.dim
    if perm is None:
        perm = choose_pivot_permutation(family, t)
    perm = tuple(perm)
    p_inv = signed_permutation(perm).T.real
    perm_fac = permutation_factors(perm)

    lower = [(j, k) for k in range(n - 1) for j in range(k + 1, n)]
    upper = [(r, c) for r in range(n - 2, -1, -1) for c in range(r + 1, n)]

    def decompose(m):
        mh = [[sum(m[r][k] * p_inv[k, c] for k in range(n) if p_inv[k, c] != 0) for c in range(n)]
              for r in range(n)]
        a = [row[:] for row in mh]
        low = {}
        up = {}
        piv = []
        for k in range(n):
            d = a[k][k]
            piv.append(d)
            for i in range(k + 1, n):
                low[(i, k)] = a[i][k] / d
            for j in range(k + 1, n):
                up[(k, j)] = a[k][j] / d
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = a[i][j] - a[i][k] * a[k][j] / d
        ys = []
        y = 1.0
        for k in range(n - 1):
            y = y * piv[k]
            ys.append(y)
        return low, ys, up

    def entry_map(m):
        low, ys, up = decompose(m)
        out = [low[p] for p in lower]
        for y in ys:
            out.extend(_lulu_entries(y))
        out.extend(up[p] for p in upper)
        out.extend(-1.0 if f.row < f.col else 1.0 for f in perm_fac)
        return out

    def denominator_map(m):
        return decompose(m)[1]

    rows = [j for j, _ in lower]
    cols = [k for _, k in lower]
    for k in range(n - 1):
        for r, c in ((k + 1, k), (k, k + 1), (k + 1, k), (k, k + 1)):
            rows.append(r)
            cols.append(c)
    rows += [r for r, _ in upper]
    cols += [c for _, c in upper]
    rows += [f.row for f in perm_fac]
    cols += [f.col for f in perm_fac]
    full = FactorChain(n, tuple(rows), tuple(cols), entry_map, family, t, "LemmaGeneral",
                       denominator_map=denominator_map, permutation=perm)
    # permutation entries are +-1 in the order (1, -1, 1) per transposition
    n_low, n_diag, n_up = len(lower), 4 * (n - 1), len(upper)
    groups = [[i] for i in range(n_low)]
    groups += [list(range(n_low + 4 * k, n_low + 4 * k + 4)) for k in range(n - 1)]
    groups += [[n_low + n_diag + i] for i in range(n_up)]
    groups += [list(range(n_low + n_diag + n_up, len(rows)))] if perm_fac else []
    keep = [g for g in groups if not _is_trivial(full, g)]
    return _pruned(full, keep)


# (rows, cols) per case, 0-based; L = (1, 0), U = (0, 1)
_L, _U = (1, 0), (0, 1)
_CASES = {
    1: ([_L, _U, _L, _U], lambda a, b, c, d: [(1 + c - a) / a, 1.0, a - 1, (b - 1) / a], "a"),
    2: ([_U, _L, _U, _L], lambda a, b, c, d: [(1 + b - d) / d, 1.0, d - 1, (c - 1) / d], "d"),
    3: ([_U, _L, _U], lambda a, b, c, d: [b - a * b, -1 / b, b], "b"),
    # cases 4, 5: L U L ordering; see README for the corrected displays
    4: ([_L, _U, _L], lambda a, b, c, d: [(d - 1) / b, b, -1 / b], "b"),
    5: ([_L, _U, _L], lambda a, b, c, d: [-1 / b, b, -1 / b], "b"),
}


def _admissible(case: int, mz: np.ndarray, tol: float = 1e-12):
    a, b, c, d = mz[:, 0, 0], mz[:, 0, 1], mz[:, 1, 0], mz[:, 1, 1]
    scale = max(1.0, np.max(np.abs(mz)))
    zero = lambda x: np.max(np.abs(x)) <= tol * scale
    nonvanishing = lambda x: np.min(np.abs(x)) > 1e-10 * scale
    if case == 1:
        return not zero(a) and nonvanishing(a), "a must be nonzero on the contour"
    if case == 2:
        return not zero(d) and nonvanishing(d), "d must be nonzero on the contour"
    pattern = {3: zero(d), 4: zero(a), 5: zero(a) and zero(d)}[case]
    return pattern and nonvanishing(b), f"zero pattern of case {case} not matched"


def sl2_factorize(family: SymbolFamily, t=None, case: int = 1) -> FactorChain:
    """One of the five explicit SL_2 chains.

    Cases 1 and 2 need ``a`` (resp. ``d``) nonvanishing on the contour; cases
    3-5 need ``d == 0``, ``a == 0`` or both, with ``b`` nonvanishing.
    """
    if family.dim != 2:
        raise CaseNotAdmissible("explicit cases apply to 2x2 symbols only")
    if case not in _CASES:
        raise CaseNotAdmissible(f"unknown case {case}")
    t = family.params(t)
    mz = family(ContourGrid(1.0, 256).nodes, t)
    ok, why = _admissible(case, mz)
    if not ok:
        raise CaseNotAdmissible(f"case {case}: {why}")
    pos, formula, den = _CASES[case]

    def entry_map(m):
        return formula(m[0][0], m[0][1], m[1][0], m[1][1])

    def denominator_map(m):
        return [{"a": m[0][0], "b": m[0][1], "d": m[1][1]}[den]]

    return FactorChain(2, tuple(p[0] for p in pos), tuple(p[1] for p in pos), entry_map, family, t,
                       f"SL2Case{case}", denominator_map=denominator_map)


def default_sl2_chain(family: SymbolFamily, t=None) -> FactorChain:
    """Case 1, else case 2, else the first matching triangular pattern."""
    last = None
    for case in (1, 2, 3, 4, 5):
        try:
            return sl2_factorize(family, t, case)
        except CaseNotAdmissible as exc:
            last = exc
    raise CaseNotAdmissible(f"no explicit SL2 case applies: {last}")


def factorize(family: SymbolFamily, t=None, case: int | None = None) -> FactorChain:
    """CLI default: explicit SL_2 cases for 2x2 symbols, the general chain otherwise."""
    if family.dim == 2:
        return default_sl2_chain(family, t) if case is None else sl2_factorize(family, t, case)
    return lemma_factorize(family, t)


def uniform_radii(count: int, outer: float, lower: float) -> tuple[float, ...]:
    step = (outer - lower) / count
    return tuple(outer - k * step for k in range(count))


def chain_poles(chain: FactorChain, radii: Sequence[float]) -> list[tuple[complex, int]]:
    """Zeros of the chain's denominators between the smallest and largest of ``radii``."""
    out = []
    if chain.denominator_map is None:
        return out
    for idx in range(len(chain.denominators(np.array([1.0 + 0j])))):
        fn = lambda z, idx=idx: chain.denominators(np.asarray(z, dtype=complex))[idx]
        zs, _ = locate_zeros(fn, radii)
        out.extend(zs)
    return out


def assign_contours(chain: FactorChain, annulus=None, minor_zeros=None, outer: float = 1.0,
                    clearance: float = POLE_CLEARANCE, min_spacing: float = 1e-3) -> FactorChain:
    """Nested radii ``outer = r_1 > ... > r_R`` spaced uniformly down to the nearest pole.

    The band between the innermost and outermost circle is kept free of
    poles of every entry; ``minor_zeros`` defaults to the zeros of the
    chain's denominators found on probe circles of ``annulus``.
    """
    annulus = tuple(annulus or chain.family.annulus)
    lo, hi = annulus
    if not lo < outer < hi:
        raise CannotSeparate(f"outer radius {outer} outside annulus {annulus}")
    if len(chain) == 0:
        return chain.with_radii(())
    if minor_zeros is None:
        radii = sorted(set(list(probe_radii(annulus)) + [outer, lo + 1e-6 * (hi - lo)]))
        minor_zeros = chain_poles(chain, radii)
    moduli = [abs(v) for v, _ in minor_zeros]
    if any(abs(m - outer) < clearance for m in moduli):
        raise CannotSeparate(f"a pole lies within {clearance} of the outer radius {outer}")
    below = [m for m in moduli if m < outer]
    lower = max([lo] + [m + clearance for m in below])
    radii = uniform_radii(len(chain), outer, lower)
    if len(chain) > 1 and (outer - lower) / len(chain) < min_spacing:
        raise CannotSeparate(f"band ({lower:.4g}, {outer:.4g}] too thin for {len(chain)} contours")
    out = chain.with_radii(radii)
    _check_band(out, radii)
    return out


def _check_band(chain: FactorChain, radii, n_points: int = 256):
    for r in radii:
        g = ContourGrid(r, n_points)
        a = chain.entries(g.nodes)
        if not np.all(np.isfinite(a)):
            raise ZeroOnContour(f"factor entries are not finite on |z| = {r:.6g}")
    if chain.denominator_map is None or len(radii) < 2:
        return
    g_out, g_in = ContourGrid(max(radii), n_points), ContourGrid(min(radii), n_points)
    for d_out, d_in in zip(chain.denominators(g_out.nodes), chain.denominators(g_in.nodes)):
        try:
            if winding_number(d_out) != winding_number(d_in):
                raise CannotSeparate("a pole of the factor entries lies between the contours")
        except NearZeroOnContour as exc:
            raise ZeroOnContour(str(exc)) from exc
