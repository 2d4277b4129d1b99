"""Random polynomial fields with exact Laplacians, for patch tests."""

import itertools

import numpy as np


class Poly:
    def __init__(self, dim, degree, seed=0):
        rng = np.random.default_rng(seed)
        self.exps = [a for a in itertools.product(range(degree + 1), repeat=dim) if sum(a) <= degree]
        self.coef = rng.uniform(-1, 1, len(self.exps))
        self.dim = dim

    def U(self, x):
        x = np.atleast_2d(x)
        return sum(c * np.prod(x ** np.array(a), axis=1) for c, a in zip(self.coef, self.exps))

    def laplacian(self, x):
        x = np.atleast_2d(x)
        out = np.zeros(len(x))
        for c, a in zip(self.coef, self.exps):
            for d in range(self.dim):
                if a[d] >= 2:
                    b = np.array(a)
                    b[d] -= 2
                    out += c * a[d] * (a[d] - 1) * np.prod(x**b, axis=1)
        return out

    def grad(self, x):
        x = np.atleast_2d(x)
        out = np.zeros((len(x), self.dim))
        for c, a in zip(self.coef, self.exps):
            for d in range(self.dim):
                if a[d] >= 1:
                    b = np.array(a)
                    b[d] -= 1
                    out[:, d] += c * a[d] * np.prod(x**b, axis=1)
        return out

    def rho(self, velocity=None):
        if velocity is None:
            return lambda x: -self.laplacian(x)
        c = np.asarray(velocity, dtype=float)
        return lambda x: -self.laplacian(x) + self.grad(x) @ c
