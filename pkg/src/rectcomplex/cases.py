"""Manufactured solutions with closed-form derivatives and loads.

Derivatives are taken symbolically once and compiled to numpy callables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .mesh import Domain

X, Y = sp.symbols("x y", real=True)


def _compile(expr: sp.Expr):
    fn = sp.lambdify((X, Y), expr, modules="numpy")

    def call(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(fn(x, y), dtype=float), np.broadcast(x, y).shape)

    return call


@dataclass(eq=False)
class ExactCase:
    """Scalar (biharmonic) or velocity-pressure (Stokes) exact solution.

    ``solution`` holds one expression for scalar cases and the two velocity
    components for Stokes cases; ``load`` likewise.
    """

    name: str
    solution: tuple[sp.Expr, ...]
    load: tuple[sp.Expr, ...]
    pressure: sp.Expr | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def is_vector(self) -> bool:
        return len(self.solution) == 2

    def _fn(self, key, expr):
        if key not in self._cache:
            self._cache[key] = _compile(expr)
        return self._cache[key]

    def derivative(self, dx: int = 0, dy: int = 0, component: int = 0):
        """Callable for d^(dx+dy) u_component / dx^dx dy^dy."""
        expr = self.solution[component]
        return self._fn(("u", component, dx, dy), sp.diff(expr, X, dx, Y, dy) if dx + dy else expr)

    def value(self, x, y):
        if self.is_vector:
            return np.stack([self.derivative(0, 0, c)(x, y) for c in range(2)])
        return self.derivative()(x, y)

    def gradient(self, x, y):
        """Gradient (scalar case) or Jacobian rows stacked (vector case)."""
        if self.is_vector:
            return np.stack([np.stack([self.derivative(1, 0, c)(x, y), self.derivative(0, 1, c)(x, y)])
                             for c in range(2)])
        return np.stack([self.derivative(1, 0)(x, y), self.derivative(0, 1)(x, y)])

    def f(self, x, y):
        if self.is_vector:
            return np.stack([self._fn(("f", c), self.load[c])(x, y) for c in range(2)])
        return self._fn(("f", 0), self.load[0])(x, y)

    def p(self, x, y):
        if self.pressure is None:
            raise ValueError(f"case {self.name!r} has no pressure")
        return self._fn(("p",), self.pressure)(x, y)


def _bubble(domain: Domain) -> sp.Expr:
    return (X - domain.x_min) * (X - domain.x_max) * (Y - domain.y_min) * (Y - domain.y_max)


def biharmonic_case(u: sp.Expr, name: str = "custom") -> ExactCase:
    lap = sp.diff(u, X, 2) + sp.diff(u, Y, 2)
    f = sp.expand(sp.diff(lap, X, 2) + sp.diff(lap, Y, 2))
    return ExactCase(name, (u,), (f,))


def stokes_case(stream: sp.Expr, p: sp.Expr, name: str = "custom") -> ExactCase:
    """Stokes case with velocity curl(stream) = (d stream/dy, -d stream/dx)."""
    u = (sp.diff(stream, Y), -sp.diff(stream, X))
    f = tuple(
        sp.simplify(-(sp.diff(uc, X, 2) + sp.diff(uc, Y, 2)) + sp.diff(p, var))
        for uc, var in zip(u, (X, Y))
    )
    return ExactCase(name, u, f, p)


@lru_cache(maxsize=None)
def benchmark_biharmonic(domain: Domain = Domain()) -> ExactCase:
    """u = (3x^2 - 2y + 6xy^2) * bubble^2, clamped on the rectangle."""
    return biharmonic_case((3 * X**2 - 2 * Y + 6 * X * Y**2) * _bubble(domain) ** 2, "biharmonic")


@lru_cache(maxsize=None)
def benchmark_stokes(domain: Domain = Domain()) -> ExactCase:
    """u = curl(exp(x + 2y) * bubble^2), p = -sin(2 pi x) sin(2 pi y)."""
    return stokes_case(sp.exp(X + 2 * Y) * _bubble(domain) ** 2,
                       -sp.sin(2 * sp.pi * X) * sp.sin(2 * sp.pi * Y), "stokes")
