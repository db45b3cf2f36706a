"""Malgrange one-forms, curvature, factorization corrections and derivatives of ln tau.

Every form is a contour integral over ``Sigma_1`` evaluated with the
trapezoidal rule; z-derivatives of sampled data are spectral.  Components
are indexed by the parameter direction ``t_i``; two-forms store
``Omega[i, j]`` as the coefficient of ``dt_i ^ dt_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .contour import (
    EXTERIOR,
    ContourGrid,
    cauchy_project,
    contour_integral,
    continuous_log,
    derivative_along,
    laurent_transform,
    sample_on_grid,
    spectral_derivative,
    winding_number,
)
from .errors import CVanishesAtZero, CaseNotAdmissible, NonAdmissibleCase
from .factor import FactorChain, assign_contours, sl2_factorize
from .iiks import IiksSolution, build_system, fredholm_det, solve_theta
from .symbol import SymbolFamily, locate_zeros, param_derivative

__all__ = [
    "FormSample",
    "omega_malgrange",
    "omega_hat",
    "omega_difference",
    "curvature_two_form",
    "theta_correction",
    "theta_case1_closed_form",
    "theta_triangular",
    "dlog_tau",
    "tau_at",
    "fd_dlog_tau",
    "fd_gradient",
    "fd_curl",
    "szego_double_integral",
    "contour_ratio",
    "transition_upsilon",
    "path_integrate",
]


@dataclass(frozen=True)
class FormSample:
    t: np.ndarray
    one_form: np.ndarray | None = None
    two_form: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.two_form is not None:
            w = np.asarray(self.two_form)
            if w.shape[0] != w.shape[1] or np.any(w + w.T != 0):
                raise ValueError("two-form must be exactly antisymmetric")

    def __getitem__(self, i):
        return self.one_form[i]

    def to_dict(self) -> dict:
        cplx = lambda v: [float(np.real(v)), float(np.imag(v))]
        out = {"t": [float(x) for x in self.t], **self.meta}
        if self.one_form is not None:
            out["one_form"] = [cplx(v) for v in self.one_form]
        if self.two_form is not None:
            n = self.two_form.shape[0]
            out["two_form"] = {f"{i},{j}": cplx(self.two_form[i, j]) for i in range(n) for j in range(i + 1, n)}
        return out


def _antisym(upper: dict, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=complex)
    for (i, j), v in upper.items():
        out[i, j] = v
        out[j, i] = -v
    return out


def _trace_integral(mats, grid: ContourGrid) -> complex:
    return complex(contour_integral(np.trace(mats, axis1=-2, axis2=-1), grid) / (2j * np.pi))


def _dm(family, grid, t):
    return [param_derivative(family, grid.nodes, t, i) for i in range(family.param_dim)]


def omega_malgrange(solution, family: SymbolFamily, t=None) -> FormSample:
    """``omega_i = oint Tr(G_-^{-1} G_-' dM_i M^{-1}) dz / 2 pi i`` on the solution's outer circle."""
    t = family.params(t)
    grid = solution.grid
    gm = solution.gamma_minus
    dgm = spectral_derivative(gm, grid)
    minv = np.linalg.inv(family(grid.nodes, t))
    left = np.linalg.solve(gm, dgm)
    comps = [_trace_integral(left @ d @ minv, grid) for d in _dm(family, grid, t)]
    return FormSample(t, np.array(comps), meta={"n_points": grid.n_points})


def omega_hat(solution, family: SymbolFamily, t=None) -> FormSample:
    """``oint Tr(G_+^{-1} G_+' M^{-1} dM_i) dz / 2 pi i`` with ``G_+ = G_- M``."""
    t = family.params(t)
    grid = solution.grid
    m = family(grid.nodes, t)
    gp = solution.gamma_minus @ m
    left = np.linalg.solve(gp, spectral_derivative(gp, grid))
    minv = np.linalg.inv(m)
    comps = [_trace_integral(left @ minv @ d, grid) for d in _dm(family, grid, t)]
    return FormSample(t, np.array(comps), meta={"n_points": grid.n_points})


def omega_difference(family: SymbolFamily, t=None, n_points: int = 256, radius: float = 1.0) -> FormSample:
    """``oint Tr(M' M^{-1} dM_i M^{-1}) dz / 2 pi i``, the solution-independent gap between the two forms."""
    t = family.params(t)
    grid = ContourGrid(radius, n_points)
    m = family(grid.nodes, t)
    minv = np.linalg.inv(m)
    dz = spectral_derivative(m, grid) @ minv
    comps = [_trace_integral(dz @ d @ minv, grid) for d in _dm(family, grid, t)]
    return FormSample(t, np.array(comps), meta={"n_points": n_points})


def curvature_two_form(family: SymbolFamily, t=None, n_points: int = 256, radius: float = 1.0) -> FormSample:
    """``Omega_ij = 1/2 oint Tr(X_i X_j' - X_j X_i') dz / 2 pi i`` with ``X_i = dM_i M^{-1}``."""
    t = family.params(t)
    grid = ContourGrid(radius, n_points)
    minv = np.linalg.inv(family(grid.nodes, t))
    xi = [d @ minv for d in _dm(family, grid, t)]
    dxi = [spectral_derivative(x, grid) for x in xi]
    p = family.param_dim
    upper = {(i, j): 0.5 * _trace_integral(xi[i] @ dxi[j] - xi[j] @ dxi[i], grid)
             for i in range(p) for j in range(i + 1, p)}
    return FormSample(t, two_form=_antisym(upper, p), meta={"n_points": n_points})


def theta_correction(chain: FactorChain, n_points: int = 256, radius: float | None = None) -> FormSample:
    """``sum_{nu >= 2} oint Tr(P_{nu-1}^{-1} P_{nu-1}' dF_nu F_nu^{-1}) dz / 2 pi i``.

    ``P_k = F_1 ... F_k``.  Added to the Malgrange form this gives
    ``d ln tau`` for the chain.
    """
    radius = radius if radius is not None else (chain.radii[0] if chain.radii else 1.0)
    grid = ContourGrid(radius, n_points)
    z = grid.nodes
    comps = np.zeros(chain.family.param_dim, dtype=complex)
    if len(chain) < 2:
        return FormSample(chain.t, comps, meta={"n_points": n_points})
    parts = chain.partial_products(z)
    a = chain.entries(z)
    for i in range(chain.family.param_dim):
        da = chain.entry_derivatives(z, i)
        total = 0j
        for nu in range(1, len(chain)):
            p = parts[nu]
            left = np.linalg.solve(p, spectral_derivative(p, grid))
            j, k = chain.rows[nu], chain.cols[nu]
            # dF F^{-1} = da E_jk (1 - a E_jk) = da E_jk, so only the (k, j) entry of left survives
            total += complex(contour_integral(left[:, k, j] * da[nu], grid) / (2j * np.pi))
        comps[i] = total
    return FormSample(chain.t, comps, meta={"n_points": n_points})


def theta_case1_closed_form(family: SymbolFamily, t=None, n_points: int = 256, radius: float = 1.0) -> FormSample:
    """``oint ((a'/a)(d da - c db) + a c' d(b/a)) dz / 2 pi i`` for the case-1 chain."""
    t = family.params(t)
    grid = ContourGrid(radius, n_points)
    m = family(grid.nodes, t)
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    da_z = spectral_derivative(a, grid)
    dc_z = spectral_derivative(c, grid)
    comps = []
    for dm in _dm(family, grid, t):
        pa, pb = dm[:, 0, 0], dm[:, 0, 1]
        p_ratio = (pb * a - b * pa) / a ** 2
        integrand = da_z / a * (d * pa - c * pb) + a * dc_z * p_ratio
        comps.append(complex(contour_integral(integrand, grid) / (2j * np.pi)))
    return FormSample(t, np.array(comps), meta={"n_points": n_points})


def theta_triangular(family: SymbolFamily, t=None, n_points: int = 256, radius: float = 1.0) -> FormSample:
    """``oint d(beta) beta' dz / 2 pi i`` with ``beta = log b`` for the triangular cases."""
    t = family.params(t)
    grid = ContourGrid(radius, n_points)
    b = family(grid.nodes, t)[:, 0, 1]
    beta = continuous_log(b, winding_number(b), grid)
    dbeta_z = spectral_derivative(beta, grid)
    comps = [complex(contour_integral(dm[:, 0, 1] / b * dbeta_z, grid) / (2j * np.pi))
             for dm in _dm(family, grid, t)]
    return FormSample(t, np.array(comps), meta={"n_points": n_points})


def dlog_tau(solution: IiksSolution) -> FormSample:
    """``sum_nu oint_{Sigma_nu} (Theta_ext^{-1} Theta_ext')_{k j} da_nu dz / 2 pi i``.

    ``Theta_ext`` is the boundary value of Theta on ``Sigma_nu`` from outside.
    """
    system = solution.system
    chain = system.chain
    comps = np.zeros(chain.family.param_dim, dtype=complex)
    for nu, g in enumerate(system.grids):
        th = solution.boundary(nu, EXTERIOR)
        left = np.linalg.solve(th, spectral_derivative(th, g))
        j, k = chain.rows[nu], chain.cols[nu]
        for i in range(chain.family.param_dim):
            da = chain.entry_derivatives(g.nodes, i)[nu]
            comps[i] += complex(contour_integral(left[:, k, j] * da, g) / (2j * np.pi))
    return FormSample(chain.t, comps, meta={"n_points": system.n_points})


def tau_at(chain: FactorChain, t, n_points: int) -> complex:
    """Fredholm determinant of ``chain`` moved to ``t`` on a fixed grid (no refinement)."""
    system = build_system(chain.at(t), n_points)
    if system.size == 0:
        return 1.0 + 0j
    sign, logabs = np.linalg.slogdet(np.eye(system.size) - system.nystrom)
    return complex(sign * np.exp(logabs))


def fd_gradient(fn: Callable[[np.ndarray], complex], t, h: float = 1e-3, log_ratio: bool = False) -> np.ndarray:
    """Central differences at steps ``h`` and ``h/2`` combined by Richardson extrapolation.

    With ``log_ratio`` the differences are ``log(fn(t+h) / fn(t-h))``,
    which keeps the branch of the logarithm consistent.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.size, dtype=complex)
    for i in range(t.size):
        e = np.zeros(t.size)
        e[i] = 1.0

        def central(step):
            hi, lo = fn(t + step * e), fn(t - step * e)
            diff = np.log(hi / lo) if log_ratio else hi - lo
            return diff / (2 * step)

        out[i] = (4 * central(h / 2) - central(h)) / 3
    return out


def fd_dlog_tau(chain: FactorChain, t=None, n_points: int | None = None, h: float = 1e-3) -> np.ndarray:
    """Finite-difference ``d ln tau / dt_i`` on a fixed grid."""
    t = chain.t if t is None else chain.family.params(t)
    n = n_points or fredholm_det(chain.at(t)).n_points
    return fd_gradient(lambda s: tau_at(chain, s, n), t, h, log_ratio=True)


def fd_curl(form: Callable[[np.ndarray], np.ndarray], t, i: int = 0, j: int = 1, h: float = 1e-3) -> complex:
    """``d_i w_j - d_j w_i`` of a one-form given as ``t -> components``."""
    t = np.asarray(t, dtype=float)
    grad_j = fd_gradient(lambda s: form(s)[j], t, h)
    grad_i = fd_gradient(lambda s: form(s)[i], t, h)
    return complex(grad_j[i] - grad_i[j])


def szego_double_integral(b: Callable, db: Callable, n_points: int = 256, outer: float = 1.01) -> complex:
    """``2 oint oint beta(w) d beta(z) / (w - z)^2 dw dz / (2 pi i)^2``.

    ``w`` runs over the unit circle and ``z`` over the slightly larger circle
    of radius ``outer``.  The inner integral is the z-derivative of the
    exterior Cauchy transform of ``beta``, summed from its Laurent series;
    direct quadrature of the nearly singular kernel would need far more nodes.
    """
    gw, gz = ContourGrid(1.0, n_points), ContourGrid(outer, n_points)
    beta = continuous_log(sample_on_grid(b, gw), 0, gw)
    # oint beta(w) / (w - z) dw / 2 pi i = -beta_-(z) outside the circle
    inner = -derivative_along(cauchy_project(laurent_transform(beta, gw), EXTERIOR)).evaluate(gz.nodes)
    dbeta_z = sample_on_grid(db, gz) / sample_on_grid(b, gz)
    return complex(2 * contour_integral(inner * dbeta_z, gz) / (2j * np.pi))


def contour_ratio(a: Callable, c: Callable, inner_radius: float, outer_radius: float,
                  negate_c: bool = False) -> tuple[complex, list]:
    """Predicted ``tau_outer / tau_inner`` as the product of ``c(v)^{-ord_v(a)}``.

    The zeros ``v`` of ``a`` between the two radii are located numerically.
    ``negate_c`` uses ``-c(v)`` instead of ``c(v)``.
    """
    zeros, _ = locate_zeros(a, [inner_radius, outer_radius])
    ratio = 1.0 + 0j
    for v, order in zeros:
        cv = complex(np.asarray(c(np.array([v])))[0])
        if abs(cv) < 1e-12:
            raise CVanishesAtZero(f"c vanishes at the zero {v:.6g} of a")
        ratio *= (-cv if negate_c else cv) ** (-order)
    return ratio, zeros


def transition_upsilon(family: SymbolFamily, t=None, n_points: int = 256) -> dict:
    """Closed-form transition function between the case-1 and case-2 chains.

    ``ln U = oint [lb (l_ad)' - l_ad K/z + lb L/z] dz / 2 pi i`` with
    ``lb = log(b / z^K)`` and ``l_ad = log(a d / z^L)``.
    """
    t = family.params(t)
    for case in (1, 2):
        try:
            sl2_factorize(family, t, case)
        except CaseNotAdmissible as exc:
            raise NonAdmissibleCase(f"case {case} not admissible: {exc}") from exc
    grid = ContourGrid(1.0, n_points)
    z = grid.nodes
    m = family(z, t)
    b, ad = m[:, 0, 1], m[:, 0, 0] * m[:, 1, 1]
    K, L = winding_number(b), winding_number(ad)
    lb = continuous_log(b, K, grid)
    lad = continuous_log(ad, L, grid)
    integrand = lb * spectral_derivative(lad, grid) - lad * K / z + lb * L / z
    log_u = complex(contour_integral(integrand, grid) / (2j * np.pi))
    return {"upsilon": complex(np.exp(log_u)), "log_upsilon": log_u, "K": K, "L": L}


def path_integrate(form: Callable[[np.ndarray], np.ndarray], t0, t1, nodes: int = 32, segments: int = 1) -> complex:
    """``int w`` along the straight segment ``t0 -> t1`` by composite Gauss-Legendre."""
    t0, t1 = np.asarray(t0, dtype=float), np.asarray(t1, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    total = 0j
    for s in range(segments):
        a, b = s / segments, (s + 1) / segments
        for xi, wi in zip(x, w):
            u = 0.5 * (b - a) * xi + 0.5 * (a + b)
            comps = np.asarray(form(t0 + u * (t1 - t0)))
            total += 0.5 * (b - a) * wi * np.dot(comps, t1 - t0)
    return complex(total)
