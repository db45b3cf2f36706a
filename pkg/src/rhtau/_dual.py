"""Forward-mode dual numbers over numpy arrays.

Factor entries are rational in the symbol entries, so pushing ``M + eps dM``
through the same arithmetic gives exact directional derivatives.
"""

from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("val", "eps")
    __array_priority__ = 1000

    def __init__(self, val, eps=0.0):
        self.val = np.asarray(val, dtype=complex)
        self.eps = np.asarray(eps, dtype=complex) * np.ones_like(self.val)

    def __add__(self, other):
        v, e = _split(other)
        return Dual(self.val + v, self.eps + e)

    __radd__ = __add__

    def __sub__(self, other):
        v, e = _split(other)
        return Dual(self.val - v, self.eps - e)

    def __rsub__(self, other):
        v, e = _split(other)
        return Dual(v - self.val, e - self.eps)

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __mul__(self, other):
        v, e = _split(other)
        return Dual(self.val * v, self.eps * v + self.val * e)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v, e = _split(other)
        q = self.val / v
        return Dual(q, (self.eps - q * e) / v)

    def __rtruediv__(self, other):
        v, e = _split(other)
        q = v / self.val
        return Dual(q, (e - q * self.eps) / self.val)

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.eps[idx])


def _split(x):
    if isinstance(x, Dual):
        return x.val, x.eps
    return np.asarray(x, dtype=complex), 0.0


def value(x):
    return x.val if isinstance(x, Dual) else np.asarray(x, dtype=complex)


def tangent(x):
    return x.eps if isinstance(x, Dual) else np.zeros_like(np.asarray(x, dtype=complex))
