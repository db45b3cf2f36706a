"""Parametric matrix symbols M(z; t): normalization, pivoting, minors and their zeros."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .contour import (
    EXTERIOR,
    INTERIOR,
    ContourGrid,
    cauchy_project,
    continuous_log,
    laurent_transform,
    spectral_derivative,
    winding_number,
)
from .errors import (
    DerivativeUnstable,
    NoAdmissiblePermutation,
    NonzeroIndex,
    PhaseJumpTooLarge,
    RootRefinementFailed,
)

__all__ = [
    "SymbolFamily",
    "MinorProfile",
    "laurent_polynomial_family",
    "normalize_to_sl",
    "choose_pivot_permutation",
    "leading_minors",
    "nested_minors",
    "locate_zeros",
    "param_derivative",
    "probe_radii",
]


@dataclass(frozen=True)
class SymbolFamily:
    """``evaluator(z, t)`` returns an array of shape ``z.shape + (dim, dim)``.

    ``derivative(z, t, i)``, when given, is the exact ``dM/dt_i``; otherwise
    finite differences are used (see :func:`param_derivative`).
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dim: int
    annulus: tuple[float, float]
    param_dim: int = 1
    param_box: tuple[tuple[float, float], ...] = ()
    derivative: Callable[[np.ndarray, np.ndarray, int], np.ndarray] | None = None
    name: str = ""
    description: str = ""

    def __post_init__(self):
        lo, hi = self.annulus
        if not (0 <= lo < 1 < hi):
            raise ValueError(f"annulus must satisfy r- < 1 < r+, got {self.annulus}")

    def params(self, t) -> np.ndarray:
        if t is None:
            t = np.zeros(self.param_dim)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.shape != (self.param_dim,):
            raise ValueError(f"expected {self.param_dim} parameters, got shape {t.shape}")
        return t

    def __call__(self, z, t=None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.asarray(self.evaluator(z, self.params(t)), dtype=complex)
        return np.broadcast_to(out, z.shape + (self.dim, self.dim)).copy()

    def on_grid(self, grid: ContourGrid, t=None) -> np.ndarray:
        return self(grid.nodes, t)


def laurent_polynomial_family(dim, annulus, entries, param_dim=1, param_box=(), name="",
                              description="") -> SymbolFamily:
    """Family whose entries are finite Laurent polynomials in z with polynomial-in-t coefficients.

    ``entries[r][c]`` is a list of ``(zpow, tpows, coef)`` terms meaning
    ``coef * z**zpow * prod_i t_i**tpows[i]``.  Parameter derivatives are exact.
    """
    table = [[[(int(p), tuple(int(e) for e in tp), complex(cf)) for p, tp, cf in entries[r][c]]
              for c in range(dim)] for r in range(dim)]
    for row in table:
        for terms in row:
            for _, tp, _ in terms:
                if len(tp) != param_dim:
                    raise ValueError(f"term has {len(tp)} t-exponents, expected {param_dim}")

    def _eval(z, t, wrt=None):
        out = np.zeros(z.shape + (dim, dim), dtype=complex)
        for r in range(dim):
            for c in range(dim):
                acc = np.zeros(z.shape, dtype=complex)
                for p, tp, cf in table[r][c]:
                    coef = cf
                    for i, e in enumerate(tp):
                        if i == wrt:
                            coef = coef * e * t[i] ** (e - 1) if e else 0.0
                        else:
                            coef = coef * t[i] ** e
                    if coef != 0:
                        acc = acc + coef * z ** p
                out[..., r, c] = acc
        return out

    return SymbolFamily(
        evaluator=lambda z, t: _eval(z, t),
        dim=dim,
        annulus=tuple(annulus),
        param_dim=param_dim,
        param_box=tuple(tuple(b) for b in param_box),
        derivative=lambda z, t, i: _eval(z, t, wrt=i),
        name=name,
        description=description,
    )


def _chopped_projection(samples, grid: ContourGrid, side: str, rel_tol=1e-15):
    full = laurent_transform(samples, grid)
    series = cauchy_project(full, side)
    coeffs = series.normalized
    # relative to the whole series: a side made only of roundoff must vanish
    scale = np.max(np.abs(full.normalized)) if coeffs.size else 0.0
    coeffs = np.where(np.abs(coeffs) < rel_tol * max(scale, 1e-300), 0, coeffs)
    return replace(series, normalized=coeffs)


def normalize_to_sl(family: SymbolFamily, n_points: int = 256) -> SymbolFamily:
    """Rescale the first row/column so that ``det M == 1`` identically.

    Uses the scalar factorization ``y_+ = y_- det M`` with ``y(inf) = 1``:
    ``log y_+`` and ``log y_-`` are the interior and (negated) exterior
    Cauchy projections of a continuous ``log det M`` on the unit circle.
    """
    grid = ContourGrid(1.0, n_points)
    probe = family.on_grid(grid, None)
    if np.max(np.abs(np.linalg.det(probe) - 1)) < 1e-13 and _det_is_one(family):
        return family

    def split(t):
        d = np.linalg.det(family.on_grid(grid, t))
        k = winding_number(d)
        if k != 0:
            raise NonzeroIndex(f"det M has winding number {k} on the unit circle at t={t}")
        ell = continuous_log(d, 0, grid)
        return (_chopped_projection(ell, grid, INTERIOR), _chopped_projection(ell, grid, EXTERIOR))

    def evaluator(z, t):
        plus, minus = split(t)
        log_yp = plus.evaluate(z)
        log_ym = -minus.evaluate(z)
        m = family(z, t)
        m[..., 0, :] *= np.exp(log_ym)[..., None]
        m[..., :, 0] *= np.exp(-log_yp)[..., None]
        return m

    return SymbolFamily(
        evaluator=evaluator,
        dim=family.dim,
        annulus=family.annulus,
        param_dim=family.param_dim,
        param_box=family.param_box,
        derivative=None,
        name=family.name,
        description=family.description,
    )


def _det_is_one(family: SymbolFamily) -> bool:
    lo, hi = family.annulus
    rng = np.random.default_rng(0)
    for r in (0.5 * (lo + 1), 1.0, 0.5 * (1 + min(hi, 2.0))):
        g = ContourGrid(r, 64)
        ts = [None]
        if family.param_box:
            box = np.array(family.param_box, dtype=float)
            ts.append(box[:, 0] + rng.random(len(box)) * (box[:, 1] - box[:, 0]))
        for t in ts:
            if np.max(np.abs(np.linalg.det(family.on_grid(g, t)) - 1)) > 1e-12:
                return False
    return True


def leading_minors(mz: np.ndarray, perm: Sequence[int] | None = None) -> np.ndarray:
    """Leading principal minors ``q_1 .. q_{n-1}`` of ``M[:, perm]``, stacked on the first axis."""
    n = mz.shape[-1]
    if perm is not None:
        mz = mz[..., :, list(perm)]
    return np.stack([np.linalg.det(mz[..., :l, :l]) for l in range(1, n)])


def choose_pivot_permutation(family: SymbolFamily, t_probe=None, n_probe: int = 64,
                             threshold: float = 1e-12) -> tuple[int, ...]:
    """First column ordering (lexicographic, identity first) with no identically-zero minor."""
    mz = family.on_grid(ContourGrid(1.0, n_probe), t_probe)
    for perm in itertools.permutations(range(family.dim)):
        q = leading_minors(mz, perm)
        if np.all(np.max(np.abs(q), axis=1) > threshold):
            return perm
    raise NoAdmissiblePermutation("every column ordering has an identically vanishing minor")


def probe_radii(annulus, count: int = 8) -> np.ndarray:
    lo, hi = annulus
    return lo + (hi - lo) * np.arange(1, count + 1) / (count + 1)


@dataclass(frozen=True)
class MinorProfile:
    permutation: tuple[int, ...]
    radii: np.ndarray
    minors: list = field(repr=False)          # minors[l][i] = samples of q_{l+1} on circle radii[i]
    zero_locations: list = field(default_factory=list)   # per minor: [(v, order), ...]
    windings: list = field(default_factory=list)         # per minor: winding on each probe circle

    def all_zeros(self):
        return [z for zs in self.zero_locations for z in zs]


def _circle_samples(func, radius, n_start=256, n_max=8192):
    n = n_start
    while True:
        g = ContourGrid(radius, n)
        vals = func(g.nodes)
        try:
            w = winding_number(vals)
            return g, vals, w
        except PhaseJumpTooLarge:
            if n >= n_max:
                raise
            n *= 2


def _derivative(func, z, h=1e-4):
    return (func(z - 2 * h) - 8 * func(z - h) + 8 * func(z + h) - func(z + 2 * h)) / (12 * h)


def _local_order(func, v, rho, n=64):
    g = ContourGrid(rho, n)
    return winding_number(func(v + g.nodes))


def locate_zeros(func: Callable[[np.ndarray], np.ndarray], radii: Sequence[float],
                 n_start: int = 256, max_iter: int = 50, residual_tol: float = 1e-10):
    """Zeros (with orders) of a scalar analytic ``func`` between the outermost and innermost ``radii``.

    Counts come from winding differences between consecutive circles; the
    locations inside each band come from contour moments of ``f'/f``
    (Delves-Lyness) and are polished with multiplicity-aware Newton steps.
    Returns ``(zeros, windings)``.
    """
    radii = sorted(float(r) for r in radii)
    circles = [_circle_samples(func, r, n_start) for r in radii]
    windings = [w for _, _, w in circles]
    zeros = []
    for (g_in, v_in, w_in), (g_out, v_out, w_out) in zip(circles[:-1], circles[1:]):
        count = w_out - w_in
        if count <= 0:
            continue
        moments = []
        for p in range(1, count + 1):
            s = 0j
            for g, v, sign in ((g_out, v_out, 1), (g_in, v_in, -1)):
                dlog = spectral_derivative(v, g) / v
                s += sign * np.sum(g.weights * g.nodes ** p * dlog) / (2j * np.pi)
            moments.append(s)
        # Newton identities: power sums -> monic polynomial coefficients
        e = [1.0 + 0j]
        for k in range(1, count + 1):
            acc = sum((-1) ** (i - 1) * e[k - i] * moments[i - 1] for i in range(1, k + 1))
            e.append(acc / k)
        poly = [(-1) ** k * e[k] for k in range(count + 1)]
        approx = np.roots(poly) if count > 0 else []
        zeros.extend(_cluster_and_polish(func, approx, g_in.radius, g_out.radius, max_iter, residual_tol))
    return zeros, windings


def _cluster_and_polish(func, approx, r_in, r_out, max_iter, residual_tol):
    approx = list(np.atleast_1d(approx))
    clusters = []
    for a in approx:
        for cl in clusters:
            if abs(cl[0] - a) < 1e-3 * max(1.0, abs(a)):
                cl.append(a)
                break
        else:
            clusters.append([a])
    out = []
    centers = [np.mean(cl) for cl in clusters]
    for idx, cl in enumerate(clusters):
        m = len(cl)
        v = complex(np.mean(cl))
        f = lambda x: np.asarray(func(np.atleast_1d(np.asarray(x, dtype=complex))))[0]
        converged = False
        for _ in range(max_iter):
            fv = f(v)
            if fv == 0:
                converged = True
                break
            dv = _derivative(f, v)
            if dv == 0:
                break
            step = m * fv / dv
            v = v - step
            if abs(step) < 1e-14 * max(1.0, abs(v)):
                converged = True
                break
        scale = max(1.0, abs(f(v + 1e-2)))
        if not converged and abs(f(v)) > residual_tol * scale:
            raise RootRefinementFailed(f"Newton did not converge near {cl[0]:.6g}")
        if any(abs(v - w) < 1e-8 * max(1.0, abs(v)) for w, _ in out):
            continue  # two seeds polished onto the same multiple root
        others = [abs(c - v) for j, c in enumerate(centers) if j != idx]
        rho = min([1e-2, 0.25 * (abs(v) - r_in), 0.25 * (r_out - abs(v))] + [0.25 * o for o in others])
        rho = max(rho, 1e-6)
        order = _local_order(lambda x: np.asarray(func(np.asarray(x, dtype=complex))), v, rho)
        if order != m:
            # trust the local winding over the moment clustering
            m = order
        out.append((v, m))
    return out


def nested_minors(family: SymbolFamily, perm: Sequence[int], t=None, n_probe: int = 256,
                  radii: Sequence[float] | None = None) -> MinorProfile:
    """Sample the leading minors of ``M[:, perm]`` on probe circles and locate their zeros."""
    perm = tuple(perm)
    radii = np.asarray(probe_radii(family.annulus) if radii is None else radii, dtype=float)
    minors, zeros, winds = [], [], []
    for l in range(1, family.dim):
        def q(z, l=l):
            z = np.asarray(z, dtype=complex)
            return np.linalg.det(family(z, t)[..., :, list(perm)][..., :l, :l])
        samples = [q(ContourGrid(r, n_probe).nodes) for r in radii]
        for s in samples:
            if np.max(np.abs(s)) <= 1e-12:
                raise NoAdmissiblePermutation(f"minor q_{l} vanishes identically for permutation {perm}")
        zs, ws = locate_zeros(q, radii, n_start=n_probe)
        minors.append(samples)
        zeros.append(zs)
        winds.append(ws)
    return MinorProfile(perm, radii, minors, zeros, winds)


def param_derivative(family: SymbolFamily, z, t, i: int, h: float | None = None,
                     rel_tol: float = 1e-7) -> np.ndarray:
    """``dM/dt_i`` at nodes ``z``; exact when the family supplies it, else Richardson-checked FD."""
    z = np.asarray(z, dtype=complex)
    t = family.params(t)
    if family.derivative is not None:
        out = np.asarray(family.derivative(z, t, i), dtype=complex)
        return np.broadcast_to(out, z.shape + (family.dim, family.dim)).copy()
    if h is None:
        h = 1e-4 * (1 + abs(t[i]))

    def stencil(step):
        e = np.zeros_like(t)
        e[i] = step
        return (-family(z, t + 2 * e) + 8 * family(z, t + e) - 8 * family(z, t - e)
                + family(z, t - 2 * e)) / (12 * step)

    d1 = stencil(h)
    d2 = stencil(h / 2)
    scale = np.max(np.abs(family(z, t)))
    gap = np.max(np.abs(d1 - d2))
    if gap > rel_tol * np.max(np.abs(d2)) + 1e-10 * scale:
        raise DerivativeUnstable(f"finite-difference derivative unstable in t_{i} (gap {gap:.3g})")
    return (16 * d2 - d1) / 15
