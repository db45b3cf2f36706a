"""Built-in symbol families used by the CLI suites and the tests."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .symbol import SymbolFamily

__all__ = ["CATALOG", "get_family", "list_catalog", "random_sl2", "random_sl3", "triangular_family",
           "identity", "szego_exp", "divisor_demo", "contour_crossing", "contour_crossing_b",
           "two_param_curvature", "triangular_opoly", "transition_demo"]


def _mat2(a, b, c, d):
    shape = np.broadcast_shapes(*(np.shape(x) for x in (a, b, c, d)))
    out = np.empty(shape + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = a, b, c, d
    return out


def _z(z):
    return np.asarray(z, dtype=complex)


def identity() -> SymbolFamily:
    def ev(z, t):
        z = _z(z)
        return _mat2(np.ones_like(z), 0 * z, 0 * z, np.ones_like(z))
    return SymbolFamily(ev, 2, (0.5, 2.0), description="constant identity symbol; tau = 1",
                        name="identity", derivative=lambda z, t, i: np.zeros(_z(z).shape + (2, 2), complex))


def triangular_family(a: Callable, beta: Callable, dbeta: Callable, annulus=(0.3, 3.0), name="",
                      description="", param_dim=1) -> SymbolFamily:
    """``[[a, b], [-1/b, 0]]`` with ``b = exp(beta(z, t))``; ``dbeta(z, t, i)`` is d beta / d t_i."""
    def ev(z, t):
        z = _z(z)
        b = np.exp(beta(z, t))
        return _mat2(a(z, t) * np.ones_like(z), b, -1 / b, 0 * z)

    def deriv(z, t, i):
        z = _z(z)
        b = np.exp(beta(z, t))
        db = dbeta(z, t, i) * b
        eps = 1e-6 * (1 + abs(t[i]))
        e = np.zeros_like(t)
        e[i] = eps
        da = (a(z, t + e) - a(z, t - e)) / (2 * eps) * np.ones_like(z)
        return _mat2(da, db, db / b ** 2, 0 * z)

    return SymbolFamily(ev, 2, annulus, param_dim=param_dim, derivative=deriv, name=name,
                        description=description)


def szego_exp() -> SymbolFamily:
    return triangular_family(lambda z, t: z / 2, lambda z, t: t[0] * (z + 1 / z),
                             lambda z, t, i: z + 1 / z, name="szego-exp",
                             description="[[z/2, b], [-1/b, 0]], b = exp(t(z + 1/z)); strong Szego constant "
                                         "exp(t^2) (triangular chain)")


def divisor_demo() -> SymbolFamily:
    def ev(z, t):
        z = _z(z)
        s = t[0]
        return _mat2(z, s + 0 * z, s + 0 * z, (1 + s * s) / z)

    def deriv(z, t, i):
        z = _z(z)
        return _mat2(0 * z, 1 + 0 * z, 1 + 0 * z, 2 * t[0] / z)

    return SymbolFamily(ev, 2, (0.2, 5.0), param_box=((-1.0, 1.0),), derivative=deriv, name="divisor-demo",
                        description="[[z, t], [t, (1 + t^2)/z]]; non-solvable at t = 0 where the partial "
                                    "indices are (1, -1); tau vanishes there")


def contour_crossing() -> SymbolFamily:
    def ev(z, t):
        z = _z(z)
        a = z - t[0]
        return _mat2(a, np.ones_like(z), a - 1, np.ones_like(z))

    def deriv(z, t, i):
        z = _z(z)
        return _mat2(-np.ones_like(z), 0 * z, -np.ones_like(z), 0 * z)

    return SymbolFamily(ev, 2, (0.3, 3.0), param_box=((0.4, 0.95),), derivative=deriv, name="contour-crossing",
                        description="[[a, 1], [a - 1, 1]], a = z - t; the zero of a crosses the contours")


def contour_crossing_b() -> SymbolFamily:
    """Same zero of ``a`` with ``b``, ``d`` nonconstant so that the chain is nontrivial."""
    def ev(z, t):
        z = _z(z)
        a = z - t[0]
        b = 2 + 0.5 * z
        d = 1 + 0.3 / z
        return _mat2(a, b, (a * d - 1) / b, d)

    def deriv(z, t, i):
        z = _z(z)
        b = 2 + 0.5 * z
        d = 1 + 0.3 / z
        return _mat2(-np.ones_like(z), 0 * z, -d / b, 0 * z)

    return SymbolFamily(ev, 2, (0.31, 3.9), param_box=((0.4, 0.95),), derivative=deriv,
                        name="contour-crossing-b",
                        description="[[a, b], [(ad - 1)/b, d]], a = z - t, b = 2 + z/2, d = 1 + 0.3/z "
                                    "(contour change with nontrivial factors)")


def two_param_curvature() -> SymbolFamily:
    def ev(z, t):
        z = _z(z)
        e = np.exp(t[0] * z)
        return _mat2(e, t[1] + 0 * z, t[1] / z, (1 + t[1] ** 2 / z) / e)

    def deriv(z, t, i):
        z = _z(z)
        e = np.exp(t[0] * z)
        if i == 0:
            return _mat2(z * e, 0 * z, 0 * z, -z * (1 + t[1] ** 2 / z) / e)
        return _mat2(0 * z, 1 + 0 * z, 1 / z, 2 * t[1] / z / e)

    return SymbolFamily(ev, 2, (0.2, 5.0), param_dim=2, param_box=((-0.5, 0.5), (0.1, 0.8)), derivative=deriv,
                        name="two-param-curvature",
                        description="[[exp(t1 z), t2], [t2/z, (1 + t2^2/z) exp(-t1 z)]]; curvature of the "
                                    "Malgrange form")


def triangular_opoly() -> SymbolFamily:
    """``[[z, z mu], [0, 1/z]]`` with weight ``mu = t/z + 1/z^2``."""
    def ev(z, t):
        z = _z(z)
        mu = t[0] / z + 1 / z ** 2
        return _mat2(z, z * mu, 0 * z, 1 / z)

    def deriv(z, t, i):
        z = _z(z)
        return _mat2(0 * z, np.ones_like(z), 0 * z, 0 * z)

    return SymbolFamily(ev, 2, (0.3, 3.0), param_box=((-1.0, 1.0),), derivative=deriv, name="triangular-opoly",
                        description="[[z, z mu], [0, 1/z]], mu = t/z + 1/z^2; solvability decided by the moment "
                                    "determinant")


def _poly(coeffs, z):
    # coeffs: {power: value}
    return sum(c * z ** p for p, c in coeffs.items())


def random_sl2(seed: int = 0, param_dim: int = 1, scale: float = 0.12, b_power: int = 0,
               name: str = "random-sl2") -> SymbolFamily:
    """Seeded ``L(p1) U(p2) L(p3)`` with Laurent polynomials ``p_i`` affine in ``t``.

    ``p2`` is ``z^b_power (1 + small)`` so that ``ind b = b_power``.
    """
    rng = np.random.default_rng(seed)
    powers = (-1, 0, 1)

    def draw():
        base = {p: scale * complex(*rng.normal(size=2)) for p in powers}
        slopes = [{p: scale * complex(*rng.normal(size=2)) for p in powers} for _ in range(param_dim)]
        return base, slopes

    terms = [draw() for _ in range(3)]

    def parts(z, t, wrt=None):
        out = []
        for k, (base, slopes) in enumerate(terms):
            if wrt is None:
                p = _poly(base, z) + sum(t[i] * _poly(slopes[i], z) for i in range(param_dim))
            else:
                p = _poly(slopes[wrt], z)
            if k == 1:
                p = z ** b_power * ((1 if wrt is None else 0) + 0.5 * p)
            out.append(p * np.ones_like(z))
        return out

    def compose(p1, p2, p3, q1, q2, q3):
        # value and derivative of [[1 + p2 p3, p2], [p1 + p3 (1 + p1 p2), 1 + p1 p2]]
        a = 1 + p2 * p3
        c = p1 + p3 * (1 + p1 * p2)
        d = 1 + p1 * p2
        if q1 is None:
            return _mat2(a, p2, c, d)
        da = q2 * p3 + p2 * q3
        dd = q1 * p2 + p1 * q2
        dc = q1 + q3 * d + p3 * dd
        return _mat2(da, q2, dc, dd)

    def ev(z, t):
        z = _z(z)
        return compose(*parts(z, t), None, None, None)

    def deriv(z, t, i):
        z = _z(z)
        return compose(*parts(z, t), *parts(z, t, i))

    box = tuple((-0.5, 0.5) for _ in range(param_dim))
    return SymbolFamily(ev, 2, (0.5, 2.0), param_dim=param_dim, param_box=box, derivative=deriv, name=name,
                        description=f"seeded product L U L of Laurent polynomials (seed {seed}); generic "
                                    f"analytic SL2 symbol")


def random_sl3(seed: int = 0, scale: float = 0.3) -> SymbolFamily:
    """Seeded ``L D U`` with unipotent triangular Laurent parts and a diagonal exp factor."""
    rng = np.random.default_rng(seed)
    coeff = lambda: {p: scale * complex(*rng.normal(size=2)) for p in (-1, 0, 1)}
    low = {(1, 0): coeff(), (2, 0): coeff(), (2, 1): coeff()}
    up = {(0, 1): coeff(), (0, 2): coeff(), (1, 2): coeff()}
    diag = [coeff(), coeff()]
    slope = coeff()

    def ev(z, t):
        z = _z(z)
        eye = np.broadcast_to(np.eye(3, dtype=complex), z.shape + (3, 3))
        lm, um = eye.copy(), eye.copy()
        for (r, c), cf in low.items():
            lm[..., r, c] = _poly(cf, z)
        for (r, c), cf in up.items():
            um[..., r, c] = _poly(cf, z) + (t[0] * _poly(slope, z) if (r, c) == (0, 2) else 0)
        g1, g2 = np.exp(_poly(diag[0], z)), np.exp(_poly(diag[1], z))
        dm = np.zeros(z.shape + (3, 3), dtype=complex)
        dm[..., 0, 0], dm[..., 1, 1], dm[..., 2, 2] = g1, g2 / g1, 1 / g2
        return lm @ dm @ um

    return SymbolFamily(ev, 3, (0.5, 2.0), name=f"random-sl3-{seed}",
                        description=f"seeded L D U product (seed {seed}); generic analytic SL3 symbol")


def transition_demo() -> SymbolFamily:
    fam = random_sl2(seed=7, param_dim=1, scale=0.2, b_power=1, name="transition-demo")
    return SymbolFamily(fam.evaluator, 2, fam.annulus, fam.param_dim, fam.param_box, fam.derivative,
                        "transition-demo",
                        "seeded L U L product with ind b = 1; both explicit SL2 chains admissible "
                        "(transition functions between factorizations)")


CATALOG: dict[str, Callable[[], SymbolFamily]] = {
    "identity": identity,
    "szego-exp": szego_exp,
    "divisor-demo": divisor_demo,
    "contour-crossing": contour_crossing,
    "contour-crossing-b": contour_crossing_b,
    "two-param-curvature": two_param_curvature,
    "triangular-opoly": triangular_opoly,
    "random-sl2": random_sl2,
    "transition-demo": transition_demo,
}


def get_family(name: str) -> SymbolFamily:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown catalog family {name!r}; known: {', '.join(CATALOG)}") from None


def list_catalog() -> list[dict]:
    out = []
    for name, make in CATALOG.items():
        fam = make()
        out.append({"name": name, "dim": fam.dim, "param_dim": fam.param_dim,
                    "annulus": list(fam.annulus), "description": fam.description})
    return out
