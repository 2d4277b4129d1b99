"""Closed-form manufactured solutions with gradients and Laplacians."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

NAMES = ("u1", "u2", "u3", "u4", "smooth1d")

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ManufacturedSolution:
    """``U`` with its gradient and Laplacian; every callable takes (q, dim) points."""

    name: str
    dim: int
    U: Field
    grad: Field
    laplacian: Field

    def rho(self, velocity=None) -> Field:
        """Forcing of ``-lap(U) + c . grad(U)``."""
        if velocity is None:
            return lambda x: -self.laplacian(_pts(x, self.dim))
        c = np.asarray(velocity, dtype=float)
        if c.shape != (self.dim,):
            raise ValueError(f"velocity must have {self.dim} components")
        return lambda x: -self.laplacian(_pts(x, self.dim)) + self.grad(_pts(x, self.dim)) @ c


def _pts(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, dim)


def _separable(fs, dfs, d2fs, scale: float, dim: int):
    """``scale * prod_i f_i(x_i)``."""

    def U(x):
        x = _pts(x, dim)
        return scale * np.prod([fs[i](x[:, i]) for i in range(dim)], axis=0)

    def grad(x):
        x = _pts(x, dim)
        vals = [fs[i](x[:, i]) for i in range(dim)]
        out = np.empty_like(x)
        for k in range(dim):
            out[:, k] = scale * dfs[k](x[:, k]) * np.prod([vals[i] for i in range(dim) if i != k], axis=0)
        return out

    def lap(x):
        x = _pts(x, dim)
        vals = [fs[i](x[:, i]) for i in range(dim)]
        total = np.zeros(len(x))
        for k in range(dim):
            total += d2fs[k](x[:, k]) * np.prod([vals[i] for i in range(dim) if i != k], axis=0)
        return scale * total

    return U, grad, lap


def _u1(dim):
    f = lambda t: t**3 - t**6
    df = lambda t: 3 * t**2 - 6 * t**5
    d2f = lambda t: 6 * t - 30 * t**4
    return _separable([f] * dim, [df] * dim, [d2f] * dim, 4.0**dim, dim)


def _u2(dim):
    pi = np.pi
    f = lambda t: np.cos(pi * t)
    df = lambda t: -pi * np.sin(pi * t)
    d2f = lambda t: -(pi**2) * np.cos(pi * t)
    return _separable([f] * dim, [df] * dim, [d2f] * dim, 1.0, dim)


def _u3(dim):
    pi = np.pi
    fs = [lambda t: np.sinh(pi * t)] + [lambda t: np.cosh(pi * t)] * (dim - 1)
    dfs = [lambda t: pi * np.cosh(pi * t)] + [lambda t: pi * np.sinh(pi * t)] * (dim - 1)
    d2fs = [lambda t: pi**2 * np.sinh(pi * t)] + [lambda t: pi**2 * np.cosh(pi * t)] * (dim - 1)
    scale = 1.0 / (np.sinh(pi) * np.cosh(pi) ** (dim - 1))
    return _separable(fs, dfs, d2fs, scale, dim)


def _u4(dim):
    half_pi = np.pi / 2

    def U(x):
        x = _pts(x, dim)
        return np.cos(half_pi * np.sum(x * x, axis=1))

    def grad(x):
        x = _pts(x, dim)
        s = half_pi * np.sum(x * x, axis=1)
        return -np.pi * np.sin(s)[:, None] * x

    def lap(x):
        x = _pts(x, dim)
        r2 = np.sum(x * x, axis=1)
        s = half_pi * r2
        return -np.pi * dim * np.sin(s) - np.pi**2 * r2 * np.cos(s)

    return U, grad, lap


def _smooth1d(dim):
    # no symmetry about any grid point, so odd-degree cancellation is not
    # helped by the solution itself
    f = lambda t: np.exp(t) * np.sin(2.0 * t + 0.5)
    df = lambda t: np.exp(t) * (np.sin(2.0 * t + 0.5) + 2.0 * np.cos(2.0 * t + 0.5))
    d2f = lambda t: np.exp(t) * (4.0 * np.cos(2.0 * t + 0.5) - 3.0 * np.sin(2.0 * t + 0.5))
    return _separable([f], [df], [d2f], 1.0, 1)


_BUILDERS = {"u1": _u1, "u2": _u2, "u3": _u3, "u4": _u4, "smooth1d": _smooth1d}


def manufactured(name: str, dim: int) -> ManufacturedSolution:
    """Look up a manufactured solution.

    ``u1``-``u3`` are defined in 1, 2 and 3 dimensions, ``u4`` (radial) in 2
    and 3, ``smooth1d`` only in 1D.
    """
    if name not in _BUILDERS:
        raise ValueError(f"unknown solution {name!r}; choose from {', '.join(NAMES)}")
    ok = {"u4": (2, 3), "smooth1d": (1,)}.get(name, (1, 2, 3))
    if dim not in ok:
        raise ValueError(f"solution {name!r} is not defined in {dim}D")
    U, grad, lap = _BUILDERS[name](dim)
    return ManufacturedSolution(name, dim, U, grad, lap)
