"""Evaluable functions with exact gradients, plus simple test doubles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Feature:
    """A region the estimator should sample explicitly.

    ``radius == 0`` marks a single point (for instance a dyadic spike
    centre where the derivative attains its lower envelope).
    """

    center: tuple
    radius: float


class FunctionHandle:
    """Scalar function on R^dim with an everywhere-defined gradient.

    Subclasses implement :meth:`value` and :meth:`grad` on ``(n, dim)``
    arrays.  :meth:`features` describes thin regions (atom supports, spike
    centres) that uniform sampling would miss.
    """

    dim: int = 1
    lipschitz: float = np.inf

    def value(self, X) -> np.ndarray:
        raise NotImplementedError

    def grad(self, X) -> np.ndarray:
        raise NotImplementedError

    def features(self, center, radius: float) -> list[Feature]:
        return []

    def hints(self, center, radius: float) -> np.ndarray:
        """Extra sample points near ``center`` where gradients change quickly.

        Unlike features, hints do not influence the choice of working radius.
        """
        return np.zeros((0, self.dim))

    def _pts(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float).reshape(-1, self.dim)

    def __call__(self, X):
        return self.value(X)


class LinearHandle(FunctionHandle):
    def __init__(self, q):
        self.q = np.asarray(q, dtype=float).ravel()
        self.dim = len(self.q)
        self.lipschitz = float(np.linalg.norm(self.q))

    def value(self, X):
        return self._pts(X) @ self.q

    def grad(self, X):
        return np.tile(self.q, (len(self._pts(X)), 1))


class AbsFirstCoordinate(FunctionHandle):
    """``|x_1|`` with the a.e. gradient ``(sign(x_1), 0, ...)`` (+1 at 0)."""

    def __init__(self, dim: int = 2):
        self.dim = dim
        self.lipschitz = 1.0

    def value(self, X):
        return np.abs(self._pts(X)[:, 0])

    def grad(self, X):
        P = self._pts(X)
        G = np.zeros_like(P)
        G[:, 0] = np.where(P[:, 0] < 0, -1.0, 1.0)
        return G


class QuadraticHandle(FunctionHandle):
    """``<x, Q x> / 2 + <b, x>``."""

    def __init__(self, Q, b=None):
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.dim = self.Q.shape[0]
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)

    def value(self, X):
        P = self._pts(X)
        return 0.5 * np.einsum("ij,jk,ik->i", P, self.Q, P) + P @ self.b

    def grad(self, X):
        return self._pts(X) @ self.Q.T + self.b
