"""Independent primal-side oracle for checking the dual-CD SVM solver."""

import numpy as np
from numba import njit


@njit(cache=True)
def _subgradient_descent(X, y, C, n_steps):
    """Projected subgradient descent on the hinge objective.

    Operates on the already standardized-with-bias matrix. Projects onto the
    ball ||w|| <= sqrt(2 C n) (any minimizer lies inside since P(0) = C n)
    and returns the best objective seen.
    """
    n, d = X.shape
    w = np.zeros(d)
    radius = np.sqrt(2.0 * C * n)
    best = 1e300
    for t in range(n_steps):
        g = w.copy()
        hinge = 0.0
        for i in range(n):
            f = 0.0
            for j in range(d):
                f += w[j] * X[i, j]
            margin = 1.0 - y[i] * f
            if margin > 0.0:
                hinge += margin
                for j in range(d):
                    g[j] -= C * y[i] * X[i, j]
        wnorm = 0.0
        for j in range(d):
            wnorm += w[j] * w[j]
        obj = 0.5 * wnorm + C * hinge
        if obj < best:
            best = obj
        step = 1.0 / (t + 1.0)
        for j in range(d):
            w[j] -= step * g[j]
        norm = 0.0
        for j in range(d):
            norm += w[j] * w[j]
        norm = np.sqrt(norm)
        if norm > radius:
            for j in range(d):
                w[j] *= radius / norm
    return best


def oracle_primal_minimum(X, y, C, n_steps=1_000_000):
    mean = X.mean(axis=0)
    sd = np.where(X.std(axis=0) == 0, 1.0, X.std(axis=0))
    Xb = np.ascontiguousarray(np.hstack([(X - mean) / sd, np.ones((X.shape[0], 1))]))
    return _subgradient_descent(Xb, y.astype(np.float64), C, n_steps)


def random_instance(seed, max_n=20, max_d=5):
    rng = np.random.default_rng(seed)
    while True:
        n = int(rng.integers(4, max_n + 1))
        d = int(rng.integers(1, max_d + 1))
        X = rng.standard_normal((n, d))
        y = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
        if np.any(y > 0) and np.any(y < 0):
            return X, y
