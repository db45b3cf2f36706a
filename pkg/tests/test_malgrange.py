import numpy as np
import pytest

from rhtau.catalog import random_sl2, szego_exp, triangular_family
from rhtau.contour import ContourGrid
from rhtau.errors import CVanishesAtZero, NonAdmissibleCase
from rhtau.factor import assign_contours, factorize, lemma_factorize, sl2_factorize
from rhtau.iiks import build_system, fredholm_det, solve_theta
from rhtau.malgrange import (
    FormSample,
    contour_ratio,
    curvature_two_form,
    dlog_tau,
    fd_curl,
    fd_dlog_tau,
    fd_gradient,
    omega_difference,
    omega_hat,
    omega_malgrange,
    path_integrate,
    szego_double_integral,
    theta_case1_closed_form,
    theta_correction,
    theta_triangular,
    transition_upsilon,
)
from rhtau.symbol import SymbolFamily, laurent_polynomial_family


def mat2(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in (a, b, c, d)))
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def solved(family, t, case=None, n=256):
    chain = assign_contours(factorize(family, t, case))
    return chain, solve_theta(build_system(chain, n))


# form containers ------------------------------------------------------------------

def test_form_sample_antisymmetry_and_dict():
    w = np.array([[0, 1j], [-1j, 0]])
    s = FormSample(np.array([0.1, 0.2]), np.array([1 + 2j, 3.0]), w, {"n_points": 64})
    d = s.to_dict()
    assert d["one_form"] == [[1.0, 2.0], [3.0, 0.0]] and d["two_form"] == {"0,1": [0.0, 1.0]}
    assert s[0] == 1 + 2j
    with pytest.raises(ValueError):
        FormSample(np.array([0.0, 0.0]), two_form=np.array([[0, 1], [1, 0]]))


# forms of simple families ---------------------------------------------------------

def test_constant_family_forms_vanish():
    entries = [[[(0, (0,), 2.0), (1, (0,), 0.3)], [(0, (0,), 1.0)]],
               [[(0, (0,), 1.0), (1, (0,), 0.3)], [(0, (0,), 1.0)]]]
    fam = laurent_polynomial_family(2, (0.5, 2.0), entries)
    chain, sol = solved(fam, [0.3])
    for form in (omega_malgrange(sol, fam, [0.3]), omega_hat(sol, fam, [0.3]), dlog_tau(sol),
                 theta_correction(chain)):
        assert np.max(np.abs(form.one_form)) < 1e-14


def test_z_independent_family_has_zero_curvature():
    fam = SymbolFamily(lambda z, t: mat2(np.exp(t[0]), t[1], 0, np.exp(-t[0])) * np.ones(np.shape(z) + (1, 1)),
                       2, (0.5, 2.0), param_dim=2)
    w = curvature_two_form(fam, [0.2, 0.3]).two_form
    assert np.max(np.abs(w)) < 1e-12


def test_single_parameter_curvature_is_zero_matrix():
    w = curvature_two_form(random_sl2(0), [0.1]).two_form
    assert w.shape == (1, 1) and w[0, 0] == 0


def test_upper_triangular_explicit_omega():
    # M = [[1, t/z + t^2 z], [0, 1]]; Gamma_- = [[1, -t/z], [0, 1]] exactly
    fam = laurent_polynomial_family(2, (0.5, 2.0), [[[(0, (0,), 1)], [(-1, (1,), 1), (1, (2,), 1)]],
                                                     [[], [(0, (0,), 1)]]])
    t = 0.4
    chain = assign_contours(lemma_factorize(fam, [t]))
    sol = solve_theta(build_system(chain, 128))
    z = sol.grid.nodes
    exact = mat2(1, -t / z, 0, 1)
    assert np.max(np.abs(sol.gamma_minus - exact)) < 1e-12
    # Gamma^{-1}Gamma' and dM M^{-1} are both strictly upper triangular
    assert abs(omega_malgrange(sol, fam, [t])[0]) < 1e-12
    assert abs(dlog_tau(sol)[0]) < 1e-12


def test_diagonal_omega_double_integral():
    f = lambda z, t: np.exp(t[0] * (z + 1 / z))
    fam = SymbolFamily(lambda z, t: mat2(f(z, t), 0, 0, 1 / f(z, t)), 2, (0.3, 3.0),
                       derivative=lambda z, t, i: mat2((z + 1 / z) * f(z, t), 0, 0, -(z + 1 / z) / f(z, t)))
    t = 0.35
    _, sol = solved(fam, [t])
    om = omega_malgrange(sol, fam, [t])[0]
    dbl = szego_double_integral(lambda z: f(z, [t]), lambda z: (z + 1 / z) * f(z, [t]))
    assert abs(om - dbl) < 1e-7
    assert abs(om - 2 * t) < 1e-10


def test_omega_hat_difference_identity():
    fam = random_sl2(2, param_dim=2)
    t = [0.2, -0.1]
    _, sol = solved(fam, t)
    gap = omega_difference(fam, t, radius=sol.grid.radius).one_form
    diff = omega_hat(sol, fam, t).one_form - omega_malgrange(sol, fam, t).one_form
    assert np.max(np.abs(diff - gap)) < 1e-8


def test_omega_hat_upper_triangular():
    fam = laurent_polynomial_family(2, (0.5, 2.0), [[[(0, (0,), 1)], [(-1, (1,), 1), (1, (1,), 0.5)]],
                                                     [[], [(0, (0,), 1)]]])
    chain = assign_contours(lemma_factorize(fam, [0.3]))
    sol = solve_theta(build_system(chain, 128))
    gap = omega_difference(fam, [0.3]).one_form
    diff = omega_hat(sol, fam, [0.3]).one_form - omega_malgrange(sol, fam, [0.3]).one_form
    assert np.max(np.abs(diff - gap)) < 1e-10


# factorization corrections ----------------------------------------------------------

@pytest.mark.parametrize("seed", [0, 1, 2])
def test_theta_generic_matches_case1_closed_form(seed):
    fam = random_sl2(seed, param_dim=2)
    chain = sl2_factorize(fam, [0.1, 0.3], 1)
    generic = theta_correction(chain, radius=1.0).one_form
    closed = theta_case1_closed_form(fam, [0.1, 0.3]).one_form
    assert np.max(np.abs(generic - closed)) < 1e-8


def test_triangular_theta_and_dlog():
    fam = szego_exp()
    t = 0.3
    chain, sol = solved(fam, [t], case=3)
    th = theta_correction(chain).one_form[0]
    assert abs(th - theta_triangular(fam, [t])[0]) < 1e-10
    d = dlog_tau(sol)[0]
    assert abs(d - 2 * t) < 1e-9
    assert abs(d - omega_malgrange(sol, fam, [t])[0] - th) < 1e-9


def test_dlog_tau_matches_finite_differences():
    fam = random_sl2(3)
    chain = assign_contours(factorize(fam, [0.15]))
    n = fredholm_det(chain).n_points
    sol = solve_theta(build_system(chain, n))
    assert abs(dlog_tau(sol)[0] - fd_dlog_tau(chain, [0.15], n)[0]) < 1e-6


def test_dlog_equals_omega_plus_theta_case2():
    fam = random_sl2(4)
    chain = assign_contours(sl2_factorize(fam, [0.2], 2))
    sol = solve_theta(build_system(chain, 512))
    lhs = dlog_tau(sol)[0]
    rhs = omega_malgrange(sol, fam, [0.2])[0] + theta_correction(chain)[0]
    assert abs(lhs - rhs) < 1e-6


# finite-difference helpers ----------------------------------------------------------

def test_fd_helpers_on_polynomials():
    g = fd_gradient(lambda s: s[0] ** 3 + 2 * s[0] * s[1], [0.5, 2.0], h=1e-2)
    assert np.allclose(g, [3 * 0.25 + 4, 1.0], atol=1e-10)
    curl = fd_curl(lambda s: np.array([-s[1], s[0]]), [0.3, 0.7])
    assert abs(curl - 2) < 1e-10
    lg = fd_gradient(lambda s: np.exp(3j * s[0]), [1.0], log_ratio=True)
    assert abs(lg[0] - 3j) < 1e-10


def test_path_integrate_exact_form():
    # w = d(t0^2 t1) integrates to the endpoint difference
    form = lambda s: np.array([2 * s[0] * s[1], s[0] ** 2])
    val = path_integrate(form, [0.1, 0.2], [0.7, -0.4], nodes=8, segments=2)
    assert abs(val - (0.49 * -0.4 - 0.01 * 0.2)) < 1e-14


# contour change and transition ----------------------------------------------------------

def test_contour_ratio_examples():
    r, zeros = contour_ratio(lambda z: np.exp(z), lambda z: 1 + 0 * z, 0.6, 1.0)
    assert r == 1 and zeros == []
    v0 = 0.8
    r, zeros = contour_ratio(lambda z: z - v0, lambda z: z - v0 - 1, 0.6, 1.0)
    assert abs(r + 1) < 1e-12 and zeros[0][1] == 1
    r, zeros = contour_ratio(lambda z: (z - v0) ** 2, lambda z: 2 + (z - v0), 0.6, 1.0)
    assert abs(r - 0.25) < 1e-10 and zeros[0][1] == 2
    r, _ = contour_ratio(lambda z: z - v0, lambda z: z - v0 - 1, 0.6, 1.0, negate_c=True)
    assert abs(r - 1) < 1e-12


def test_contour_ratio_c_vanishing():
    with pytest.raises(CVanishesAtZero):
        contour_ratio(lambda z: z - 0.8, lambda z: z - 0.8, 0.6, 1.0)


def test_upsilon_constant_symbol():
    fam = SymbolFamily(lambda z, t: mat2(1, 2, 0, 1), 2, (0.5, 2.0))
    u = transition_upsilon(fam)
    assert u["K"] == 0 and u["L"] == 0 and abs(u["upsilon"] - 1) < 1e-14


def test_upsilon_needs_both_cases():
    with pytest.raises(NonAdmissibleCase):
        transition_upsilon(szego_exp(), [0.2])


def test_upsilon_derivative_matches_theta_difference():
    fam = random_sl2(6)
    t = np.array([0.1])
    lhs = fd_gradient(lambda s: transition_upsilon(fam, s)["log_upsilon"], t)[0]
    c1, c2 = sl2_factorize(fam, t, 1), sl2_factorize(fam, t, 2)
    rhs = theta_correction(c1, radius=1.0)[0] - theta_correction(c2, radius=1.0)[0]
    assert abs(lhs - rhs) < 1e-6


def test_upsilon_equals_tau_ratio():
    fam = random_sl2(6)
    t = [0.1]
    u = transition_upsilon(fam, t)
    t1 = fredholm_det(assign_contours(sl2_factorize(fam, t, 1))).value
    t2 = fredholm_det(assign_contours(sl2_factorize(fam, t, 2))).value
    assert abs(t1 / t2 / u["upsilon"] - 1) < 1e-7
