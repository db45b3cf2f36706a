import numpy as np
import pytest

from rhtau.catalog import divisor_demo, identity, random_sl2, random_sl3, szego_exp
from rhtau.contour import ContourGrid
from rhtau.errors import NonzeroIndexB, NoConvergence, OnDivisor
from rhtau.factor import assign_contours, factorize, lemma_factorize, sl2_factorize
from rhtau.iiks import build_system, explicit_triangular, fredholm_det, solve_theta
from rhtau.symbol import SymbolFamily


def mat2(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in (a, b, c, d)))
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def chain_of(family, t=None, case=None, **kw):
    return assign_contours(factorize(family, t, case), **kw)


# system assembly ---------------------------------------------------------------------

def test_empty_chain():
    chain = chain_of(identity(), case=None)
    chain = assign_contours(lemma_factorize(identity()))
    assert len(chain) == 0
    res = fredholm_det(chain)
    assert res.value == 1 and res.converged
    sol = solve_theta(res)
    z = np.array([0.3, 2.0, 5j])
    assert np.array_equal(sol.theta(z), np.broadcast_to(np.eye(2), (3, 2, 2)))


def test_single_upper_factor_has_zero_kernel():
    fam = SymbolFamily(lambda z, t: mat2(1, np.exp(z), 0, 1), 2, (0.5, 2.0))
    chain = assign_contours(lemma_factorize(fam))
    system = build_system(chain, 64)
    assert system.size == 64
    assert np.array_equal(system.nystrom, np.zeros((64, 64)))
    assert fredholm_det(chain).value == 1


def test_kernel_structure():
    chain = chain_of(random_sl2(0), [0.2])
    system = build_system(chain, 32)
    n = 32
    for nu in range(len(chain)):
        block = system.nystrom[nu * n:(nu + 1) * n, nu * n:(nu + 1) * n]
        assert np.array_equal(block, 0 * block)
    # f^T g = 0 on each contour
    f = system.f_vectors()
    labels = system.labels
    for i in range(system.size):
        assert f[i, chain.cols[labels[i]]] == 0


def test_case5_constant_b_one():
    fam = SymbolFamily(lambda z, t: mat2(0, 1, -1, 0), 2, (0.5, 2.0))
    res = fredholm_det(assign_contours(sl2_factorize(fam, None, 5)))
    assert abs(res.value - 1) < 1e-8


# determinant values ---------------------------------------------------------------------

@pytest.mark.parametrize("case", [3, 5])
def test_bessel_szego_value(case):
    b = lambda z: np.exp(0.5 * (z + 1 / z))
    a = (lambda z: 0.2 * z) if case == 3 else (lambda z: 0 * z)
    fam = SymbolFamily(lambda z, t: mat2(a(z), b(z), -1 / b(z), 0), 2, (0.3, 3.0))
    res = fredholm_det(assign_contours(sl2_factorize(fam, None, case)))
    assert abs(np.log(res.value) - 0.25) < 1e-7


def test_case4_szego_value():
    b = lambda z: np.exp(0.3 * z + 0.2 / z)
    fam = SymbolFamily(lambda z, t: mat2(0, b(z), -1 / b(z), 1 + 0.4 / z), 2, (0.3, 3.0))
    res = fredholm_det(assign_contours(sl2_factorize(fam, None, 4)))
    assert abs(np.log(res.value) - 0.06) < 1e-7


def test_divisor_demo_decreases_to_zero():
    fam = divisor_demo()
    vals = [abs(fredholm_det(chain_of(fam, [t])).value) for t in (0.4, 0.2, 0.1, 0.05)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert np.allclose(vals, [0.4, 0.2, 0.1, 0.05], rtol=1e-8)
    res = fredholm_det(chain_of(fam, [0.0]))
    assert res.on_divisor and abs(res.value) < 1e-10


def test_grid_doubling_history():
    res = fredholm_det(chain_of(random_sl2(1), [0.3]), n_points=64)
    (n1, v1), (n2, v2) = res.history[-2:]
    assert n2 == 2 * n1 and abs(v2 - v1) <= 1e-8 * abs(v2)
    assert res.converged and res.rel_change <= 1e-8


def test_no_convergence_is_reported():
    with pytest.raises(NoConvergence):
        fredholm_det(chain_of(random_sl2(1), [0.3]), n_points=8, n_max=16)


def test_tau_invariant_under_contour_moves():
    chain = chain_of(random_sl2(2), [0.1])
    base = fredholm_det(chain).value
    for radii in [(1.0, 0.9, 0.8, 0.7), (1.0, 0.85, 0.7, 0.55), (1.3, 1.1, 0.9, 0.7)]:
        moved = fredholm_det(chain.with_radii(radii)).value
        assert abs(moved / base - 1) < 1e-7


def test_sl3_lemma_chain_determinant():
    # fourteen contours; geometric spacing keeps neighbouring ratios small
    base = lemma_factorize(random_sl3(1, scale=0.1))
    vals = []
    for hi, lo in ((1.9, 0.15), (1.5, 0.12)):
        res = fredholm_det(base.with_radii(tuple(np.geomspace(hi, lo, len(base)))), n_points=64)
        assert res.converged
        vals.append(res.value)
    assert abs(vals[0] / vals[1] - 1) < 1e-7


# reconstruction of Theta ------------------------------------------------------------------

def test_case3_theta_matches_explicit_solution():
    b = lambda z: np.exp(0.4 * z - 0.3 / z + 0.1 * z ** 2)
    a = lambda z: 0.5 + 0.2 * z
    fam = SymbolFamily(lambda z, t: mat2(a(z), b(z), -1 / b(z), 0), 2, (0.3, 3.0))
    chain = assign_contours(sl2_factorize(fam, None, 3))
    sol = solve_theta(fredholm_det(chain, n_points=256))
    exact = explicit_triangular(a, b, sol.grid.n_points)
    assert abs(sol.tau - exact.tau) < 1e-10
    outer = 1.5 * np.exp(2j * np.pi * np.arange(16) / 16)
    inner = 0.5 * min(chain.radii) * np.exp(2j * np.pi * np.arange(16) / 16)
    for z in (outer, inner):
        assert np.max(np.abs(sol.theta(z) - exact.theta(z))) < 1e-6
    assert np.max(np.abs(sol.gamma_minus - exact.gamma_minus)) < 1e-6


@pytest.mark.parametrize("seed", [0, 3])
def test_jump_relations_random(seed):
    sol = solve_theta(chain_of(random_sl2(seed), [0.25]))
    assert sol.jump_residual() < 1e-7
    gp = sol.gamma_plus
    inner = sol.boundary(0, "interior")
    f1 = sol.system.chain.matrices(sol.grid.nodes)[0]
    assert np.max(np.abs(inner - sol.gamma_minus @ f1)) < 1e-7
    assert gp.shape == sol.gamma_minus.shape


def test_normalization_decays_like_inverse_radius():
    sol = solve_theta(chain_of(random_sl2(0), [0.2]))
    r1, r2 = sol.normalization_residual(1e3), sol.normalization_residual(1e4)
    assert r2 < 1e-3
    assert abs(r1 / r2 - 10) < 0.1


def test_solve_refuses_on_divisor():
    with pytest.raises(OnDivisor):
        solve_theta(chain_of(divisor_demo(), [0.0]))


# explicit triangular solution -----------------------------------------------------------

def test_explicit_trivial():
    sol = explicit_triangular(lambda z: 0 * z, lambda z: 1 + 0 * z)
    z = np.array([2.0, 3j])
    assert np.allclose(sol.theta(z), np.eye(2), atol=1e-15)
    assert sol.tau == 1


def test_explicit_exp_split():
    sol = explicit_triangular(lambda z: 0 * z, np.exp)
    z_in, z_out = np.array([0.3, -0.5j]), np.array([2.0, 4j])
    # B = z inside, 0 outside
    th_out = sol.theta(z_out)
    assert np.allclose(th_out[:, 0, 0], 1, atol=1e-13) and np.allclose(th_out[:, 1, 1], 1, atol=1e-13)
    th_in = sol.theta(z_in)
    assert np.allclose(th_in[:, 0, 1], np.exp(z_in), atol=1e-13)


def test_explicit_jump():
    b = lambda z: 2 + 0.5 * z + 0.3 / z
    sol = explicit_triangular(lambda z: z / (3 - z), b)
    assert sol.jump_residual() < 1e-8


def test_explicit_rejects_index():
    with pytest.raises(NonzeroIndexB):
        explicit_triangular(lambda z: 0 * z, lambda z: z)
