"""Synchronous and 2-colour critical points on regular and structured graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .admissible import assemble
from .coupling import CouplingFunction
from .graph import Bipartition, CellGraph
from .spectra import (
    dm_two_colour_min_eigenvalue,
    eigvalsh,
    inertia_of_eigenvalues,
    kmn_hessian_spectrum,
    laplacian_spectrum,
    synchronous_hessian_spectrum,
    zero_threshold,
)

MERGE_RADIUS = 1e-8


class SynchronyError(ValueError):
    pass


class NotCriticalError(SynchronyError):
    pass


@dataclass
class SyncClassification:
    point: tuple
    alpha: float
    beta: float
    verdict: str
    index: int
    inertia: tuple
    wedge: bool
    phi_minimum: bool
    formula_minimum: bool
    spectrum: list
    gamma: Optional[float] = None
    lambda_max: Optional[float] = None

    @property
    def is_minimum(self) -> bool:
        return self.verdict == "minimum"

    def to_json(self) -> dict:
        out = {
            "point": list(self.point),
            "alpha": self.alpha,
            "beta": self.beta,
            "verdict": self.verdict,
            "index": self.index,
            "inertia": list(self.inertia),
            "wedge": self.wedge,
            "phi_minimum": self.phi_minimum,
            "formula_minimum": self.formula_minimum,
        }
        if self.gamma is not None:
            out["gamma"] = self.gamma
        return out


def verdict_from_eigenvalues(eigs) -> tuple[str, int, tuple]:
    inr = inertia_of_eigenvalues(eigs)
    if inr.n_zero:
        verdict = "degenerate"
    elif inr.n_minus == 0:
        verdict = "minimum"
    elif inr.n_plus == 0:
        verdict = "maximum"
    else:
        verdict = "saddle"
    return verdict, inr.n_minus, inr.as_tuple()


def _positive_definite_2x2(a: float, b: float, c: float) -> bool:
    eigs = np.linalg.eigvalsh(np.array([[a, b], [b, c]]))
    return bool(eigs[0] > zero_threshold(eigs))


# -- synchronous points -----------------------------------------------------


@dataclass
class SyncCriticalSet:
    points: list
    continuum: bool = False


def find_synchronous_critical(
    phi: CouplingFunction, box=(-2.0, 2.0), grid: int = 512, tol: float = 1e-10
) -> SyncCriticalSet:
    """Roots ``t`` of ``phi_1(t, t) + phi_2(t, t)`` inside ``box``."""
    a, b = map(float, box)
    ts = np.linspace(a, b, grid + 1)

    def g(t):
        return phi.p1(t, t) + phi.p2(t, t)

    def dg(t):
        return phi.p11(t, t) + 2 * phi.p12(t, t) + phi.p22(t, t)

    vals = np.asarray(g(ts), float)
    if np.max(np.abs(vals)) <= tol:
        return SyncCriticalSet([], continuum=True)
    cands = []
    s = np.sign(vals)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        cands.append(brentq(lambda t: float(g(t)), ts[i], ts[i + 1], xtol=1e-15))
    absv = np.abs(vals)
    for i in range(len(ts)):
        left = absv[i - 1] if i > 0 else np.inf
        right = absv[i + 1] if i + 1 < len(ts) else np.inf
        if absv[i] == 0.0 or (absv[i] <= left and absv[i] <= right):
            cands.append(float(ts[i]))
    roots = []
    for t in cands:
        for _ in range(50):
            gt, dgt = float(g(t)), float(dg(t))
            if abs(gt) <= tol * 1e-3 or dgt == 0.0:
                break
            t_new = t - gt / dgt
            if not a - 1e-9 <= t_new <= b + 1e-9:
                break
            t = t_new
        if abs(float(g(t))) <= tol and a - 1e-9 <= t <= b + 1e-9:
            if all(abs(t - r) > MERGE_RADIUS for r in roots):
                roots.append(float(t))
    return SyncCriticalSet(sorted(roots))


def _sync_inequalities(alpha, beta, d, lam):
    return d * (alpha + beta), d * (alpha + (1.0 - lam / d) * beta)


def classify_synchronous(g: CellGraph, phi: CouplingFunction, x0: float, tol: float = 1e-8) -> SyncClassification:
    """Classify the synchronous point ``(x0, ..., x0)`` of ``sum_edges phi``.

    The verdict comes from the eigenvalues of the directly assembled Hessian;
    ``formula_minimum`` is the two-inequality test and ``spectrum`` the
    closed-form eigenvalues built from the Laplacian spectrum.
    """
    d = g.is_regular()
    if d is None:
        raise SynchronyError(
            "synchronous classification needs a regular graph; "
            "use classify_synchronous_kmn or the 2-colour routines instead"
        )
    resid = abs(float(phi.p1(x0, x0) + phi.p2(x0, x0)))
    if resid > tol:
        raise NotCriticalError(f"(x0, x0) = ({x0}, {x0}) is not critical for phi: residual {resid:.3g}")
    alpha, beta = float(phi.p11(x0, x0)), float(phi.p12(x0, x0))
    lam = float(laplacian_spectrum(g)[-1])

    f = assemble(g, phi)
    direct = eigvalsh(f.hessian(np.full(g.n, float(x0))))
    verdict, index, inr = verdict_from_eigenvalues(direct)
    formula = synchronous_hessian_spectrum(g, alpha, beta)

    tau = zero_threshold(formula)
    first, second = _sync_inequalities(alpha, beta, d, lam)
    formula_min = first > tau and second > tau
    wedge = d * (alpha - beta) < -tau and second > tau
    return SyncClassification(
        point=(float(x0),) * g.n,
        alpha=alpha,
        beta=beta,
        verdict=verdict,
        index=index,
        inertia=inr,
        wedge=wedge,
        phi_minimum=_positive_definite_2x2(alpha, beta, float(phi.p22(x0, x0))),
        formula_minimum=formula_min,
        spectrum=formula.tolist(),
        lambda_max=lam,
    )


def classify_synchronous_kmn(m: int, n: int, phi: CouplingFunction, x0: float, tol: float = 1e-8) -> SyncClassification:
    """Synchronous classification on K_{m,n}, m != n, where there is no wedge."""
    from .graph import complete_bipartite

    resid = abs(float(phi.p1(x0, x0) + phi.p2(x0, x0)))
    if resid > tol:
        raise NotCriticalError(f"(x0, x0) is not critical for phi: residual {resid:.3g}")
    g = complete_bipartite(m, n)
    alpha, beta = float(phi.p11(x0, x0)), float(phi.p12(x0, x0))
    direct = eigvalsh(assemble(g, phi).hessian(np.full(g.n, float(x0))))
    verdict, index, inr = verdict_from_eigenvalues(direct)
    formula = kmn_hessian_spectrum(m, n, alpha, beta)
    tau = zero_threshold(formula)
    return SyncClassification(
        point=(float(x0),) * g.n,
        alpha=alpha,
        beta=beta,
        verdict=verdict,
        index=index,
        inertia=inr,
        wedge=False,
        phi_minimum=_positive_definite_2x2(alpha, beta, float(phi.p22(x0, x0))),
        formula_minimum=bool(alpha + beta > tau and alpha - beta > tau),
        spectrum=formula.tolist(),
    )


@dataclass(frozen=True)
class Wedge:
    """Parameter region ``alpha - beta < 0 < alpha + (1 - lambda/d) beta``.

    There the synchronous point is a network minimum while ``(x0, x0)`` is
    not a minimum of the coupling.
    """

    d: int
    lambda_max: float
    slope: float  # 1 - lambda/d

    @property
    def angle(self) -> float:
        """Opening angle between the rays ``alpha = beta`` and ``alpha = -slope * beta``."""
        return math.atan2(1.0, -self.slope) - math.pi / 4

    @property
    def empty(self) -> bool:
        return abs(self.lambda_max - 2 * self.d) <= 1e-9 * self.d

    @property
    def maximal(self) -> bool:
        return abs(self.lambda_max - (self.d + 1)) <= 1e-9 * self.d

    def contains(self, alpha: float, beta: float, tau: float = 0.0) -> bool:
        return alpha - beta < -tau and alpha + self.slope * beta > tau

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "lambda_max": self.lambda_max,
            "slope": self.slope,
            "angle": self.angle,
            "empty": self.empty,
            "maximal": self.maximal,
        }


def wedge_region(g: CellGraph) -> Wedge:
    d = g.is_regular()
    if d is None:
        raise SynchronyError("the wedge is defined for regular graphs")
    lam = float(laplacian_spectrum(g)[-1])
    return Wedge(d, lam, 1.0 - lam / d)


# -- 2-colour patterns --------------------------------------------------------


@dataclass(frozen=True)
class TwoColourPattern:
    bipartition: Bipartition
    x0: float
    y0: float
    degenerate: bool = False

    def point(self, n: int) -> np.ndarray:
        return np.array([self.x0 if self.bipartition.side(v) == 1 else self.y0 for v in range(1, n + 1)])

    def swapped(self) -> "TwoColourPattern":
        return TwoColourPattern(self.bipartition, self.y0, self.x0, self.degenerate)


def coupling_critical_points(
    phi: CouplingFunction, box=(-2.0, 2.0), grid: int = 512, tol: float = 1e-10, iters: int = 60
) -> np.ndarray:
    """Critical points of ``phi`` in a square box via vectorised Newton from grid seeds."""
    a, b = map(float, box)
    s = np.linspace(a, b, grid)
    x, y = (arr.ravel() for arr in np.meshgrid(s, s, indexing="ij"))
    x, y = x.copy(), y.copy()
    width = b - a
    for _ in range(iters):
        f1, f2 = phi.p1(x, y), phi.p2(x, y)
        j11, j12, j22 = phi.p11(x, y), phi.p12(x, y), phi.p22(x, y)
        j11, j12, j22 = (np.broadcast_to(t, x.shape) for t in (j11, j12, j22))
        det = j11 * j22 - j12 * j12
        scale = np.maximum(np.abs(j11 * j22), j12 * j12) + 1e-300
        ok = np.abs(det) > 1e-12 * scale
        dx = np.zeros_like(x)
        dy = np.zeros_like(y)
        dx[ok] = (j22[ok] * f1[ok] - j12[ok] * f2[ok]) / det[ok]
        dy[ok] = (-j12[ok] * f1[ok] + j11[ok] * f2[ok]) / det[ok]
        bad = ~ok
        if np.any(bad):
            jac = np.stack([np.stack([j11[bad], j12[bad]], -1), np.stack([j12[bad], j22[bad]], -1)], -2)
            step = np.linalg.pinv(jac) @ np.stack([f1[bad], f2[bad]], -1)[..., None]
            dx[bad], dy[bad] = step[:, 0, 0], step[:, 1, 0]
        norm = np.hypot(dx, dy)
        clip = np.minimum(1.0, 0.5 * width / np.maximum(norm, 1e-300))
        x, y = x - clip * dx, y - clip * dy
        keep = np.isfinite(x) & np.isfinite(y) & (x > a - width) & (x < b + width) & (y > a - width) & (y < b + width)
        x, y = x[keep], y[keep]
    resid = np.maximum(np.abs(phi.p1(x, y)), np.abs(phi.p2(x, y)))
    inside = (x >= a - 1e-9) & (x <= b + 1e-9) & (y >= a - 1e-9) & (y <= b + 1e-9)
    pts = np.stack([x, y], -1)[(resid <= tol) & inside]
    return _merge_points(pts)


def _merge_points(pts: np.ndarray, radius: float = MERGE_RADIUS) -> np.ndarray:
    if len(pts) == 0:
        return pts.reshape(0, 2)
    pts = np.unique(np.round(pts, 12), axis=0)
    tree = cKDTree(pts)
    parent = np.arange(len(pts))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in tree.query_pairs(radius):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = sorted({find(i) for i in range(len(pts))})
    return pts[roots]


def find_two_colour_critical(
    g: CellGraph, phi: CouplingFunction, box=(-2.0, 2.0), grid: int = 512, tol: float = 1e-10
) -> list[TwoColourPattern]:
    """2-colour critical points built from critical pairs ``(x0, y0)`` of ``phi``.

    Empty unless ``g`` is bipartite. For a Z2-invariant coupling every
    pattern is returned together with its swap partner.
    """
    bp = g.bipartition()
    if bp is None:
        return []
    pts = coupling_critical_points(phi, box, grid, tol)
    found = []
    for x0, y0 in pts:
        if abs(x0 - y0) <= MERGE_RADIUS:
            continue
        h = phi.hessian2(x0, y0)
        degenerate = abs(np.linalg.det(h)) <= 1e-9 * max(1.0, float(np.max(np.abs(h))) ** 2)
        found.append(TwoColourPattern(bp, float(x0), float(y0), bool(degenerate)))
    if phi.z2_invariant:
        keys = {(round(p.x0, 7), round(p.y0, 7)) for p in found}
        for p in list(found):
            if (round(p.y0, 7), round(p.x0, 7)) not in keys:
                found.append(p.swapped())
    return sorted(found, key=lambda p: (p.x0, p.y0))


def classify_two_colour(g: CellGraph, phi: CouplingFunction, pattern: TwoColourPattern, tol: float = 1e-8) -> SyncClassification:
    dm = g.is_dm_graph()
    if dm is None:
        raise SynchronyError("2-colour classification needs a (d, m)-graph")
    d, _ = dm
    x0, y0 = pattern.x0, pattern.y0
    resid = max(abs(float(phi.p1(x0, y0))), abs(float(phi.p2(x0, y0))))
    if resid > tol:
        raise NotCriticalError(f"({x0}, {y0}) is not critical for phi: residual {resid:.3g}")
    alpha, beta, gamma = float(phi.p11(x0, y0)), float(phi.p12(x0, y0)), float(phi.p11(y0, x0))
    xbar = pattern.point(g.n)
    eigs = eigvalsh(assemble(g, phi).hessian(xbar))
    verdict, index, inr = verdict_from_eigenvalues(eigs)
    xi = dm_two_colour_min_eigenvalue(d, alpha, gamma, beta)
    tau = zero_threshold(eigs)
    return SyncClassification(
        point=tuple(float(t) for t in xbar),
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        verdict=verdict,
        index=index,
        inertia=inr,
        wedge=False,
        phi_minimum=_positive_definite_2x2(alpha, beta, float(phi.p22(x0, y0))),
        formula_minimum=bool(xi > tau),
        spectrum=eigs.tolist(),
    )


def two_colour_minimum_by_coupling(alpha: float, gamma: float, beta: float, tau: float = 0.0) -> bool:
    return alpha > tau and alpha * gamma - beta * beta > tau


@dataclass
class CoexistenceReport:
    synchronous: list
    continuum: bool
    two_colour: list
    shared_values: list = field(default_factory=list)


def coexistence_report(g: CellGraph, phi: CouplingFunction, box=(-2.0, 2.0), grid: int = 256) -> CoexistenceReport:
    """Synchronous and 2-colour critical sets side by side, flagging shared values."""
    sync = find_synchronous_critical(phi, box, grid)
    pats = find_two_colour_critical(g, phi, box, grid)
    shared = []
    for p in pats:
        for z in sync.points:
            if abs(z - p.x0) <= 1e-8 or abs(z - p.y0) <= 1e-8:
                shared.append((z, p.x0, p.y0))
    return CoexistenceReport(sync.points, sync.continuum, pats, shared)


# -- 2-valued critical points of the network function ------------------------


@dataclass
class TwoValuedPoint:
    x: tuple
    values: tuple  # the two distinct values, ascending
    phi_critical: bool  # the value pair is a critical point of phi
    proper_colouring: bool  # every edge joins the two values


@dataclass
class TwoValuedSearch:
    starts: int
    converged: int
    points: list

    @property
    def found(self) -> bool:
        return bool(self.points)

    @property
    def phi_critical_found(self) -> bool:
        return any(p.phi_critical for p in self.points)


def newton_critical_points(f, x0: np.ndarray, iters: int = 100, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Batched Newton iteration on ``grad f = 0`` (pseudo-inverse steps)."""
    x = np.array(x0, float, copy=True)
    alive = np.ones(len(x), bool)
    for _ in range(iters):
        idx = np.nonzero(alive)[0]
        if len(idx) == 0:
            break
        g = f.gradient(x[idx])
        small = np.max(np.abs(g), axis=1) <= tol * 1e-2
        step = (np.linalg.pinv(f.hessian(x[idx])) @ g[..., None])[..., 0]
        step[small] = 0.0
        x[idx] = x[idx] - step
        blown = ~np.all(np.isfinite(x[idx]), axis=1) | (np.max(np.abs(x[idx]), axis=1) > 1e6)
        alive[idx[blown | small]] = False
    ok = np.all(np.isfinite(x), axis=1)
    ok[ok] = np.max(np.abs(f.gradient(x[ok])), axis=1) <= tol
    return x, ok


def two_valued_critical_search(
    g: CellGraph,
    phi: CouplingFunction,
    starts: int = 500,
    seed: int = 0,
    box=(-2.0, 2.0),
    tol: float = 1e-10,
    distinct: float = 1e-6,
) -> TwoValuedSearch:
    """Multistart Newton on ``grad f`` for ``f = sum_edges phi``, keeping 2-valued critical points.

    A point is 2-valued when its coordinates fall into exactly two groups
    separated by more than ``distinct``.
    """
    f = assemble(g, phi)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(box[0], box[1], (starts, g.n))
    xs, ok = newton_critical_points(f, x0, tol=tol)
    found = []
    for x in xs[ok]:
        v = np.sort(x)
        cuts = np.nonzero(np.diff(v) > distinct)[0]
        if len(cuts) != 1:
            continue
        lo, hi = float(np.mean(v[: cuts[0] + 1])), float(np.mean(v[cuts[0] + 1 :]))
        if np.max(v[: cuts[0] + 1]) - np.min(v[: cuts[0] + 1]) > distinct or np.max(v[cuts[0] + 1 :]) - np.min(v[cuts[0] + 1 :]) > distinct:
            continue
        side = x > 0.5 * (lo + hi)
        proper = all(side[u - 1] != side[w - 1] for u, w in g.sorted_edges)
        resid = max(abs(float(phi.p1(lo, hi))), abs(float(phi.p2(lo, hi))))
        found.append(TwoValuedPoint(tuple(float(t) for t in x), (lo, hi), resid <= 1e-8, proper))
    return TwoValuedSearch(starts, int(ok.sum()), found)


def random_generic_coupling(rng: np.random.Generator, degree: int = 4) -> CouplingFunction:
    """A Z2-invariant polynomial with Gaussian coefficients and a coercive quartic part."""
    from .coupling import polynomial_coupling

    terms: dict = {}
    for i in range(degree + 1):
        for j in range(i, degree + 1 - i):
            if i + j == 0:
                continue
            c = float(rng.normal())
            terms[(i, j)] = terms.get((i, j), 0.0) + c
            if i != j:
                terms[(j, i)] = terms.get((j, i), 0.0) + c
    terms[(degree, 0)] = terms.get((degree, 0), 0.0) + 2.0
    terms[(0, degree)] = terms.get((0, degree), 0.0) + 2.0
    return polynomial_coupling(terms, z2=True)
