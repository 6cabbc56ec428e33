"""Laplacians, inertia, sign-based inertia bounds and closed-form Hessian spectra.

Eigenvalues come from LAPACK's dense symmetric solver via ``numpy.linalg.eigh``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .graph import CellGraph, count_components

ZERO_REL = 1e-9
ZERO_FLOOR = 1e-12


class SpectrumError(ValueError):
    pass


def eigvalsh(m: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    return np.linalg.eigvalsh(np.asarray(m, float))


def zero_threshold(eigs: np.ndarray) -> float:
    radius = float(np.max(np.abs(eigs))) if len(eigs) else 0.0
    return max(ZERO_REL * radius, ZERO_FLOOR)


@dataclass(frozen=True)
class Inertia:
    n_minus: int
    n_zero: int
    n_plus: int

    @property
    def n(self) -> int:
        return self.n_minus + self.n_zero + self.n_plus

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_minus, self.n_zero, self.n_plus)


def inertia_of_eigenvalues(eigs, tau: Optional[float] = None) -> Inertia:
    eigs = np.asarray(eigs, float)
    tau = zero_threshold(eigs) if tau is None else tau
    neg = int(np.sum(eigs < -tau))
    pos = int(np.sum(eigs > tau))
    return Inertia(neg, len(eigs) - neg - pos, pos)


def inertia(m: np.ndarray, tau: Optional[float] = None) -> Inertia:
    return inertia_of_eigenvalues(eigvalsh(m), tau)


def standard_laplacian(g: CellGraph) -> np.ndarray:
    """``D - A`` (loops ignored)."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def laplacian_spectrum(g: CellGraph) -> np.ndarray:
    eigs = eigvalsh(standard_laplacian(g))
    eigs[0] = 0.0 if abs(eigs[0]) < 1e-9 * max(1.0, eigs[-1]) else eigs[0]
    return eigs


def largest_laplacian_eigenvalue(g: CellGraph) -> float:
    return float(laplacian_spectrum(g)[-1])


# -- weighted Laplacians ----------------------------------------------------


@dataclass(frozen=True)
class WeightedLaplacian:
    graph: CellGraph
    weights: tuple  # aligned with graph.sorted_edges

    @property
    def matrix(self) -> np.ndarray:
        n = self.graph.n
        m = np.zeros((n, n))
        for (u, v), w in zip(self.graph.sorted_edges, self.weights):
            i, j = u - 1, v - 1
            m[i, j] -= w
            m[j, i] -= w
            m[i, i] += w
            m[j, j] += w
        return m

    def weight(self, u: int, v: int) -> float:
        key = (min(u, v), max(u, v))
        return self.weights[self.graph.sorted_edges.index(key)]

    def eigenvalues(self) -> np.ndarray:
        return eigvalsh(self.matrix)

    def inertia(self, tau: Optional[float] = None) -> Inertia:
        return inertia_of_eigenvalues(self.eigenvalues(), tau)

    def signs(self) -> list[int]:
        return [int(np.sign(w)) for w in self.weights]


def weighted_laplacian(g: CellGraph, weights) -> WeightedLaplacian:
    """``weights`` is a mapping ``{(u, v): w}`` or a sequence aligned with ``g.sorted_edges``."""
    if isinstance(weights, Mapping):
        ws = []
        for u, v in g.sorted_edges:
            if (u, v) in weights:
                ws.append(float(weights[(u, v)]))
            elif (v, u) in weights:
                ws.append(float(weights[(v, u)]))
            else:
                raise SpectrumError(f"missing weight for edge ({u}, {v})")
        extra = {(min(e), max(e)) for e in weights} - set(g.sorted_edges)
        if extra:
            raise SpectrumError(f"weights given for non-edges {sorted(extra)}")
    else:
        ws = [float(w) for w in weights]
        if len(ws) != len(g.edges):
            raise SpectrumError(f"expected {len(g.edges)} weights, got {len(ws)}")
    return WeightedLaplacian(g, tuple(ws))


@dataclass(frozen=True)
class InertiaBounds:
    c_plus: int
    c_minus: int
    minus: tuple[int, int]
    plus: tuple[int, int]
    zero: tuple[int, int]

    def contains(self, inr: Inertia) -> bool:
        return (
            self.minus[0] <= inr.n_minus <= self.minus[1]
            and self.plus[0] <= inr.n_plus <= self.plus[1]
            and self.zero[0] <= inr.n_zero <= self.zero[1]
        )

    def as_tuple(self) -> tuple[int, ...]:
        return (*self.minus, *self.zero, *self.plus)


def inertia_bounds(g: CellGraph, weight_signs: Sequence[float]) -> InertiaBounds:
    """Topological bounds on the inertia of a weighted Laplacian from edge signs.

    Signs align with ``g.sorted_edges`` and must be nonzero: a zero weight
    deletes its edge and the bounds no longer apply. Components are counted
    on the full vertex set.
    """
    if len(weight_signs) != len(g.edges):
        raise SpectrumError(f"expected {len(g.edges)} signs, got {len(weight_signs)}")
    if any(s == 0 for s in weight_signs):
        raise SpectrumError("inertia bounds need nonzero weights on every edge")
    pos = [e for e, s in zip(g.sorted_edges, weight_signs) if s > 0]
    neg = [e for e, s in zip(g.sorted_edges, weight_signs) if s < 0]
    n = g.n
    cp, cm = count_components(n, pos), count_components(n, neg)
    return InertiaBounds(
        c_plus=cp,
        c_minus=cm,
        minus=(cp - 1, n - cm),
        plus=(cm - 1, n - cp),
        zero=(1, n + 2 - cm - cp),
    )


# -- closed-form spectra ----------------------------------------------------


def synchronous_hessian_spectrum(g: CellGraph, alpha: float, beta: float) -> np.ndarray:
    """Eigenvalues ``(alpha + beta) d - beta lambda_i`` at a synchronous point of a d-regular graph."""
    d = g.is_regular()
    if d is None:
        raise SpectrumError("synchronous closed form needs a regular graph")
    lam = laplacian_spectrum(g)
    return np.sort((alpha + beta) * d - beta * lam)


def kmn_hessian_spectrum(m: int, n: int, alpha: float, beta: float) -> np.ndarray:
    """Synchronous Hessian spectrum on K_{m,n}, m != n (m cells of degree n, n of degree m)."""
    if m < 2 or n < 2:
        raise SpectrumError("need m, n >= 2")
    if m == n:
        raise SpectrumError("K_{n,n} is regular; use synchronous_hessian_spectrum")
    root = math.sqrt((m - n) ** 2 * alpha**2 + 4 * m * n * beta**2)
    vals = [n * alpha] * (m - 1) + [m * alpha] * (n - 1)
    vals += [0.5 * ((m + n) * alpha + root), 0.5 * ((m + n) * alpha - root)]
    return np.sort(np.array(vals))


def dm_two_colour_min_eigenvalue(d: int, alpha: float, gamma: float, beta: float) -> float:
    """Least Hessian eigenvalue at a 2-colour point of a (d, m)-graph."""
    if d < 1:
        raise SpectrumError("d must be positive")
    return 0.5 * d * ((alpha + gamma) - math.sqrt((alpha - gamma) ** 2 + 4 * beta**2))


def dm_two_colour_hessian(g: CellGraph, alpha: float, gamma: float, beta: float) -> np.ndarray:
    """``d alpha`` on part1, ``d gamma`` on part2, plus ``beta`` times the adjacency."""
    dm = g.is_dm_graph()
    if dm is None:
        raise SpectrumError("not a (d, m)-graph")
    d, _ = dm
    bp = g.bipartition()
    diag = np.array([d * alpha if bp.side(v) == 1 else d * gamma for v in g.vertices])
    return np.diag(diag) + beta * g.adjacency()


def regular_bounds_hold(g: CellGraph) -> dict:
    """Where the largest Laplacian eigenvalue sits in ``[d + 1, 2d]``."""
    d = g.is_regular()
    if d is None:
        raise SpectrumError("needs a regular graph")
    lam = largest_laplacian_eigenvalue(g)
    tol = 1e-9 * max(1.0, lam)
    return {
        "d": d,
        "lambda_max": lam,
        "at_lower": abs(lam - (d + 1)) <= tol,
        "at_upper": abs(lam - 2 * d) <= tol,
        "within": d + 1 - tol <= lam <= 2 * d + tol,
    }
