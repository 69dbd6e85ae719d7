"""Second-order forward-mode automatic differentiation.

A Jet2 carries a value together with its gradient and Hessian with respect
to m seed variables.  Values may be scalars or numpy arrays of any batch
shape S; then grad has shape S + (m,) and hess has shape S + (m, m).
Propagating a whole grid of points through one expression this way keeps
the arithmetic in vectorized numpy.

Hessians are kept exactly symmetric by construction: every rule that mixes
two gradients writes the symmetrized outer product, whose (i, j) and (j, i)
entries are bit-identical in IEEE arithmetic.

Any operation whose result contains a NaN or an Inf raises EvaluationError
instead of letting the poison propagate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError

__all__ = [
    "Jet2", "seed_variable", "seed_point", "constant", "jet_apply",
    "sqrt", "exp", "log", "sin", "cos", "sinh", "cosh", "tanh", "powc",
    "compose_scalar", "ELEMENTARY_OPS",
]


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian with respect to m seed variables."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @property
    def m(self) -> int:
        return self.grad.shape[-1]

    @property
    def batch_shape(self):
        return self.value.shape

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet2):
            return _check("add", Jet2(self.value + other.value,
                                      self.grad + other.grad,
                                      self.hess + other.hess))
        return _check("add", Jet2(self.value + other, self.grad, self.hess))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet2):
            return _check("sub", Jet2(self.value - other.value,
                                      self.grad - other.grad,
                                      self.hess - other.hess))
        return _check("sub", Jet2(self.value - other, self.grad, self.hess))

    def __rsub__(self, other):
        return _check("sub", Jet2(other - self.value, -self.grad, -self.hess))

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            v = self.value * other.value
            g = self.grad * other.value[..., None] + other.grad * self.value[..., None]
            h = (self.hess * other.value[..., None, None]
                 + other.hess * self.value[..., None, None]
                 + _sym_outer(self.grad, other.grad))
            return _check("mul", Jet2(v, g, h))
        return _check("mul", Jet2(self.value * other,
                                  self.grad * _scal(other),
                                  self.hess * _scal2(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            if np.any(other.value == 0.0):
                raise EvaluationError("div", "division by zero")
            return _check("div", self * _reciprocal(other))
        if np.any(np.asarray(other) == 0.0):
            raise EvaluationError("div", "division by zero")
        return _check("div", self * (1.0 / other))

    def __rtruediv__(self, other):
        if np.any(self.value == 0.0):
            raise EvaluationError("div", "division by zero")
        return _check("div", _reciprocal(self) * other)

    def __pow__(self, p):
        if isinstance(p, Jet2):
            raise DomainError("jet exponents are not supported; "
                              "use exp(q * log(b)) for variable exponents")
        return powc(self, float(p))


def _scal(c):
    return np.asarray(c)[..., None] if np.ndim(c) else c


def _scal2(c):
    return np.asarray(c)[..., None, None] if np.ndim(c) else c


def _sym_outer(ga, gb):
    """Symmetrized outer product ga (x) gb + gb (x) ga over the last axis."""
    prod = ga[..., :, None] * gb[..., None, :]
    return prod + np.swapaxes(prod, -1, -2)


def _check(op, jet):
    if (np.isfinite(jet.value).all() and np.isfinite(jet.grad).all()
            and np.isfinite(jet.hess).all()):
        return jet
    raise EvaluationError(op, "non-finite result")


def _chain(op, x, f, f1, f2):
    """Apply a scalar function with derivatives f1, f2 through a jet."""
    g = f1[..., None] * x.grad
    h = f1[..., None, None] * x.hess + f2[..., None, None] * _sym_outer(x.grad, 0.5 * x.grad)
    return _check(op, Jet2(f, g, h))


def _reciprocal(x):
    v = 1.0 / x.value
    return _chain("div", x, v, -v * v, 2.0 * v * v * v)


def seed_variable(index: int, point) -> Jet2:
    """Jet of the coordinate function u_index at the given point(s).

    ``point`` has shape (..., m); the result carries batch shape (...).
    """
    point = np.asarray(point, dtype=float)
    m = point.shape[-1]
    if not 0 <= index < m:
        raise DomainError(f"variable index {index} out of range for m={m}")
    batch = point.shape[:-1]
    grad = np.zeros(batch + (m,))
    grad[..., index] = 1.0
    return Jet2(point[..., index].copy(), grad, np.zeros(batch + (m, m)))


def seed_point(point) -> list[Jet2]:
    """All m coordinate jets at once."""
    point = np.asarray(point, dtype=float)
    return [seed_variable(i, point) for i in range(point.shape[-1])]


def constant(value, m: int, batch_shape=()) -> Jet2:
    value = np.broadcast_to(np.asarray(value, dtype=float), batch_shape).copy()
    return Jet2(value, np.zeros(batch_shape + (m,)), np.zeros(batch_shape + (m, m)))


def sqrt(x: Jet2) -> Jet2:
    if np.any(x.value <= 0.0):
        raise EvaluationError("sqrt", "argument not strictly positive")
    v = np.sqrt(x.value)
    return _chain("sqrt", x, v, 0.5 / v, -0.25 / (v * x.value))


def exp(x: Jet2) -> Jet2:
    v = np.exp(x.value)
    return _chain("exp", x, v, v, v)


def log(x: Jet2) -> Jet2:
    if np.any(x.value <= 0.0):
        raise EvaluationError("log", "argument not strictly positive")
    return _chain("log", x, np.log(x.value), 1.0 / x.value, -1.0 / (x.value * x.value))


def sin(x: Jet2) -> Jet2:
    s, c = np.sin(x.value), np.cos(x.value)
    return _chain("sin", x, s, c, -s)


def cos(x: Jet2) -> Jet2:
    s, c = np.sin(x.value), np.cos(x.value)
    return _chain("cos", x, c, -s, -c)


def sinh(x: Jet2) -> Jet2:
    s, c = np.sinh(x.value), np.cosh(x.value)
    return _chain("sinh", x, s, c, s)


def cosh(x: Jet2) -> Jet2:
    s, c = np.sinh(x.value), np.cosh(x.value)
    return _chain("cosh", x, c, s, c)


def tanh(x: Jet2) -> Jet2:
    t = np.tanh(x.value)
    sech2 = 1.0 - t * t
    return _chain("tanh", x, t, sech2, -2.0 * t * sech2)


def powc(x: Jet2, p: float) -> Jet2:
    """x**p for a constant real exponent p."""
    if p == 0.0:
        return constant(1.0, x.m, x.batch_shape)
    if p == 1.0:
        return x
    integral = p == int(p)
    if not integral and np.any(x.value <= 0.0):
        raise EvaluationError("pow", f"non-integer exponent {p} needs a positive base")
    if p < 2.0 and np.any(x.value == 0.0):
        raise EvaluationError("pow", f"exponent {p} is singular at zero base")
    v = x.value ** p
    return _chain("pow", x, v, p * x.value ** (p - 1.0),
                  p * (p - 1.0) * x.value ** (p - 2.0))


def compose_scalar(x: Jet2, f, f1, f2, op="compose") -> Jet2:
    """Push the jet x through a scalar map given pointwise f, f', f''.

    All three are arrays over x's batch shape (a table-backed profile
    function, say).  The usual univariate chain rule applies.
    """
    f = np.asarray(f, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    return _chain(op, x, f, f1, f2)


_UNARY = {
    "neg": lambda x: -x,
    "sqrt": sqrt,
    "exp": exp,
    "log": log,
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
}

_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}

ELEMENTARY_OPS = ("add", "sub", "mul", "div", "neg", "pow",
                  "sqrt", "exp", "log", "sin", "cos", "sinh", "cosh", "tanh")


def jet_apply(op: str, args, exponent: float | None = None) -> Jet2:
    """Dispatch an elementary operation by name.

    ``pow`` takes a single jet argument plus the constant ``exponent``.
    """
    if op == "pow":
        if len(args) != 1 or exponent is None:
            raise DomainError("pow expects one jet argument and a constant exponent")
        return powc(args[0], exponent)
    if op in _UNARY:
        if len(args) != 1:
            raise DomainError(f"{op} expects one argument, got {len(args)}")
        return _UNARY[op](args[0])
    if op in _BINARY:
        if len(args) != 2:
            raise DomainError(f"{op} expects two arguments, got {len(args)}")
        return _BINARY[op](args[0], args[1])
    raise DomainError(f"unknown jet operation '{op}'")
