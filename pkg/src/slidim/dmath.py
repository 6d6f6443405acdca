"""Forward-mode dual arithmetic used for all first derivatives.

A :class:`Dual` carries a value and a tuple of partial derivatives. Values
and partials may be floats, numpy arrays (vectorized evaluation) or other
Duals (nesting gives exact second Lie derivatives such as X(Xg)).

The function dispatchers (``sin`` etc.) are what compiled expressions call,
so a single compiled evaluator serves plain floats, numpy batches and dual
numbers alike.
"""

import numpy as np


class Dual:
    __slots__ = ("val", "partials")

    def __init__(self, val, partials):
        self.val = val
        self.partials = tuple(partials)

    def __repr__(self):
        return f"Dual({self.val!r}, {self.partials!r})"

    # arithmetic ------------------------------------------------------------

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val + o.val,
                        tuple(a + b for a, b in zip(self.partials, o.partials)))
        return Dual(self.val + o, self.partials)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val - o.val,
                        tuple(a - b for a, b in zip(self.partials, o.partials)))
        return Dual(self.val - o, self.partials)

    def __rsub__(self, o):
        return Dual(o - self.val, tuple(-a for a in self.partials))

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val * o.val,
                        tuple(a * o.val + self.val * b
                              for a, b in zip(self.partials, o.partials)))
        return Dual(self.val * o, tuple(a * o for a in self.partials))

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            inv = 1.0 / o.val
            return Dual(self.val * inv,
                        tuple((a - self.val * inv * b) * inv
                              for a, b in zip(self.partials, o.partials)))
        inv = 1.0 / o
        return Dual(self.val * inv, tuple(a * inv for a in self.partials))

    def __rtruediv__(self, o):
        inv = 1.0 / self.val
        w = o * inv
        return Dual(w, tuple(-w * inv * a for a in self.partials))

    def __neg__(self):
        return Dual(-self.val, tuple(-a for a in self.partials))

    def __pow__(self, o):
        if isinstance(o, Dual):
            return exp(o * log(self))
        w = self.val ** o
        f = o * self.val ** (o - 1)
        return Dual(w, tuple(f * a for a in self.partials))

    def __rpow__(self, o):
        return exp(self * np.log(o))

    # comparisons look only at values (used by event/step logic) -------------

    def __lt__(self, o):
        return self.val < (o.val if isinstance(o, Dual) else o)

    def __gt__(self, o):
        return self.val > (o.val if isinstance(o, Dual) else o)


def _chain(v, w, dw):
    """Dual with value w and partials dw * v.partials."""
    return Dual(w, tuple(dw * a for a in v.partials))


def sin(v):
    if isinstance(v, Dual):
        return _chain(v, sin(v.val), cos(v.val))
    return np.sin(v)


def cos(v):
    if isinstance(v, Dual):
        return _chain(v, cos(v.val), -sin(v.val))
    return np.cos(v)


def exp(v):
    if isinstance(v, Dual):
        w = exp(v.val)
        return _chain(v, w, w)
    return np.exp(v)


def log(v):
    if isinstance(v, Dual):
        return _chain(v, log(v.val), 1.0 / v.val)
    return np.log(v)


def sqrt(v):
    if isinstance(v, Dual):
        w = sqrt(v.val)
        return _chain(v, w, 0.5 / w)
    return np.sqrt(v)


def tanh(v):
    if isinstance(v, Dual):
        w = tanh(v.val)
        return _chain(v, w, 1.0 - w * w)
    return np.tanh(v)


def value(v):
    """Strip any dual layers, returning the underlying float/array."""
    while isinstance(v, Dual):
        v = v.val
    return v
