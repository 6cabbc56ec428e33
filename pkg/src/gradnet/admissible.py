"""Admissible functions on cell graphs: assembly, evaluation and validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .coupling import CouplingFunction, SelfConnection
from .graph import Bipartition, CellGraph

FORMS = ("all_to_all", "bipartite_general", "symmetric")
Z2_TOL = 1e-12


class AdmissibilityError(ValueError):
    pass


@dataclass(frozen=True)
class SymmetricTerm:
    """An extra fully permutation-invariant term, allowed on complete graphs only."""

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]


def elementary_symmetric(n: int, r: int) -> SymmetricTerm:
    """``e_r(x_1, ..., x_n)`` with exact gradient and Hessian."""

    def e(vals, rr):
        if rr < 0:
            return 0.0
        coef = np.zeros(len(vals) + 1)
        coef[0] = 1.0
        for v in vals:
            coef[1:] = coef[1:] + v * coef[:-1]
        return coef[rr] if rr <= len(vals) else 0.0

    def f(x):
        return float(e(np.asarray(x, float), r))

    def grad(x):
        x = np.asarray(x, float)
        return np.array([e(np.delete(x, i), r - 1) for i in range(n)])

    def hess(x):
        x = np.asarray(x, float)
        h = np.zeros((n, n))
        for i, j in itertools.combinations(range(n), 2):
            h[i, j] = h[j, i] = e(np.delete(x, [i, j]), r - 2)
        return h

    return SymmetricTerm(f, grad, hess)


@dataclass(frozen=True)
class AdmissibleFunction:
    """A network function built from one coupling plus per-degree self terms.

    In the ``bipartite_general`` form every edge is evaluated as
    ``beta(x_head, x_tail)`` with the head in ``part1`` of the bipartition;
    ``self_connections`` is then ``{"part1": {d: alpha_d}, "part2": {d: gamma_d}}``.
    In the other forms it is ``{d: alpha_d}``.
    """

    graph: CellGraph
    form: str
    coupling: CouplingFunction
    self_connections: Mapping = field(default_factory=dict)
    symmetric_term: Optional[SymmetricTerm] = None

    def __post_init__(self):
        g = self.graph
        if self.form not in FORMS:
            raise AdmissibilityError(f"unknown form {self.form!r}; expected one of {FORMS}")
        if self.form == "all_to_all" and not g.is_complete():
            raise AdmissibilityError("all_to_all form needs a complete graph")
        if self.symmetric_term is not None and self.form != "all_to_all":
            raise AdmissibilityError("a symmetric extra term is only admissible on complete graphs")
        if self.form in ("all_to_all", "symmetric"):
            self._require_z2()
        bp = g.bipartition()
        if self.form == "bipartite_general":
            if bp is None:
                raise AdmissibilityError("bipartite_general form needs a bipartite graph")
            d1 = {g.degree(v) for v in bp.part1}
            d2 = {g.degree(v) for v in bp.part2}
            if d1 & d2:
                raise AdmissibilityError(
                    f"cells of degree {sorted(d1 & d2)} appear in both parts; "
                    "the coupling must be Z2-invariant (use the symmetric form)"
                )
            tables = (self.self_connections.get("part1", {}), self.self_connections.get("part2", {}))
        else:
            tables = (self.self_connections,)
        for table in tables:
            for d, sc in table.items():
                if sc.degree != int(d):
                    raise AdmissibilityError(f"self-connection tagged degree {sc.degree} stored under {d}")
        object.__setattr__(self, "_bipartition", bp)
        heads, tails = self._orient(bp)
        object.__setattr__(self, "_heads", heads)
        object.__setattr__(self, "_tails", tails)
        object.__setattr__(self, "_self", self._vertex_self_terms(bp))

    def _require_z2(self):
        if not self.coupling.z2_invariant:
            raise AdmissibilityError(f"{self.form} form requires a Z2-invariant coupling")
        if self.coupling.k == 1:
            defect = self.coupling.z2_defect()
            if defect > Z2_TOL:
                raise AdmissibilityError(f"coupling flagged Z2-invariant but |phi(x,y)-phi(y,x)| = {defect:.3g}")

    def _orient(self, bp: Optional[Bipartition]):
        pairs = []
        for u, v in self.graph.sorted_edges:
            if self.form == "bipartite_general" and bp.side(u) == 2:
                u, v = v, u
            pairs.append((u - 1, v - 1))
        arr = np.array(pairs, dtype=int).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    def _vertex_self_terms(self, bp):
        out = []
        for v in self.graph.vertices:
            d = self.graph.degree(v)
            if self.form == "bipartite_general":
                table = self.self_connections.get("part1" if bp.side(v) == 1 else "part2", {})
            else:
                table = self.self_connections
            out.append(table.get(d, table.get(str(d))))
        return tuple(out)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def k(self) -> int:
        return self.coupling.k

    @property
    def bipartition(self) -> Optional[Bipartition]:
        return self._bipartition

    @property
    def oriented_edges(self) -> list[tuple[int, int]]:
        """1-based ``(head, tail)`` pairs in evaluation order."""
        return [(int(a) + 1, int(b) + 1) for a, b in zip(self._heads, self._tails)]

    def _cells(self, x):
        x = np.asarray(x, float)
        if self.k == 1:
            if x.shape[-1] != self.n:
                raise AdmissibilityError(f"expected {self.n} coordinates, got {x.shape[-1]}")
            return x
        if x.ndim != 1 or x.size != self.n * self.k:
            raise AdmissibilityError(f"expected {self.n * self.k} coordinates, got {x.size}")
        return x.reshape(self.n, self.k)

    def evaluate(self, x):
        """``f(x)``; with k = 1, ``x`` may carry leading batch axes."""
        c = self._cells(x)
        if self.k == 1:
            xa, xb = c[..., self._heads], c[..., self._tails]
            total = np.sum(self.coupling(xa, xb), axis=-1)
            for v, sc in enumerate(self._self):
                if sc is not None:
                    total = total + sc(c[..., v])
            if self.symmetric_term is not None:
                if c.ndim > 1:
                    total = total + np.array([self.symmetric_term.f(row) for row in c.reshape(-1, self.n)]).reshape(c.shape[:-1])
                else:
                    total = total + self.symmetric_term.f(c)
            return total if np.ndim(total) else float(total)
        total = float(np.sum(self.coupling(c[self._heads], c[self._tails])))
        for v, sc in enumerate(self._self):
            if sc is not None:
                total += float(sc(c[v]))
        return total

    def gradient(self, x):
        c = self._cells(x)
        if self.k == 1:
            xa, xb = c[..., self._heads], c[..., self._tails]
            g = np.zeros(c.shape)
            ga, gb = self.coupling.p1(xa, xb), self.coupling.p2(xa, xb)
            np.add.at(g, (..., self._heads), ga)
            np.add.at(g, (..., self._tails), gb)
            for v, sc in enumerate(self._self):
                if sc is not None:
                    g[..., v] += sc.d(c[..., v])
            if self.symmetric_term is not None:
                if c.ndim > 1:
                    flat = c.reshape(-1, self.n)
                    g += np.array([self.symmetric_term.grad(row) for row in flat]).reshape(c.shape)
                else:
                    g += self.symmetric_term.grad(c)
            return g
        g = np.zeros_like(c)
        xa, xb = c[self._heads], c[self._tails]
        np.add.at(g, self._heads, _vector_partial(self.coupling, xa, xb, 0))
        np.add.at(g, self._tails, _vector_partial(self.coupling, xa, xb, 1))
        for v, sc in enumerate(self._self):
            if sc is not None:
                g[v] += _vector_self_grad(sc, c[v])
        return g.reshape(-1)

    def hessian(self, x) -> np.ndarray:
        """Hessian matrix; leading batch axes give a stack of matrices."""
        if self.k != 1:
            raise AdmissibilityError("Hessian assembly is implemented for one-dimensional cells only")
        c = self._cells(x)
        n = self.n
        h = np.zeros(c.shape + (n,))
        xa, xb = c[..., self._heads], c[..., self._tails]
        f11 = np.broadcast_to(self.coupling.p11(xa, xb), xa.shape)
        f22 = np.broadcast_to(self.coupling.p22(xa, xb), xa.shape)
        f12 = np.broadcast_to(self.coupling.p12(xa, xb), xa.shape)
        np.add.at(h, (..., self._heads, self._heads), f11)
        np.add.at(h, (..., self._tails, self._tails), f22)
        np.add.at(h, (..., self._heads, self._tails), f12)
        np.add.at(h, (..., self._tails, self._heads), f12)
        for v, sc in enumerate(self._self):
            if sc is not None:
                h[..., v, v] += sc.dd(c[..., v])
        if self.symmetric_term is not None:
            if c.ndim > 1:
                flat = c.reshape(-1, n)
                h += np.array([self.symmetric_term.hess(row) for row in flat]).reshape(h.shape)
            else:
                h += self.symmetric_term.hess(c)
        return h


def _vector_partial(coupling: CouplingFunction, xa, xb, which: int):
    fn = coupling.d1 if which == 0 else coupling.d2
    if fn is not None:
        return fn(xa, xb)
    h = 1e-5
    out = np.zeros_like(xa)
    for j in range(xa.shape[-1]):
        e = np.zeros(xa.shape[-1])
        e[j] = h
        if which == 0:
            out[..., j] = (coupling.phi(xa + e, xb) - coupling.phi(xa - e, xb)) / (2 * h)
        else:
            out[..., j] = (coupling.phi(xa, xb + e) - coupling.phi(xa, xb - e)) / (2 * h)
    return out


def _vector_self_grad(sc: SelfConnection, xv):
    if sc.df is not None:
        return sc.df(xv)
    h = 1e-5
    out = np.zeros_like(xv)
    for j in range(xv.size):
        e = np.zeros(xv.size)
        e[j] = h
        out[j] = (sc.f(xv + e) - sc.f(xv - e)) / (2 * h)
    return out


def assemble(
    graph: CellGraph,
    coupling: CouplingFunction,
    self_connections: Optional[Mapping] = None,
    symmetric_term: Optional[SymmetricTerm] = None,
) -> AdmissibleFunction:
    """Pick the form the graph and coupling allow, then build the function."""
    sc = dict(self_connections or {})
    if graph.is_complete() and graph.n >= 2 and coupling.z2_invariant:
        form = "all_to_all"
    elif coupling.z2_invariant:
        form = "symmetric"
    else:
        form = "bipartite_general"
        if sc and not ("part1" in sc or "part2" in sc):
            sc = {"part1": sc, "part2": sc}
    return AdmissibleFunction(graph, form, coupling, sc, symmetric_term)


# -- black-box validation ---------------------------------------------------


@dataclass
class Violation:
    check: str
    vertices: tuple
    magnitude: float
    point: list


@dataclass
class AdmissibilityReport:
    samples: int
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    def by_check(self, check: str) -> list:
        return [v for v in self.violations if v.check == check]


def validate_admissibility(
    graph: CellGraph,
    f: Callable[[np.ndarray], float],
    samples: int = 5,
    seed: int = 0,
    step: float = 1e-3,
    rel_tol: float = 1e-4,
    box: float = 1.0,
) -> AdmissibilityReport:
    """Sample the derivative obstructions every admissible function obeys.

    (a) mixed second partials vanish across non-edges; (b) mixed third
    partials over distinct triples vanish unless the graph is complete;
    (c) same-degree cells see equal partials at points where both cells and
    all their inputs are synchronised. Each violation keeps the worst
    magnitude seen for that vertex tuple.
    """
    rng = np.random.default_rng(seed)
    n = graph.n
    h = step
    eye = np.eye(n) * h
    worst: dict = {}

    def flag(check, verts, mag, x, fx):
        if abs(mag) > rel_tol * (1.0 + abs(fx)):
            key = (check, verts)
            if key not in worst or abs(mag) > worst[key].magnitude:
                worst[key] = Violation(check, verts, abs(float(mag)), [float(t) for t in x])

    non_edges = [
        (u, v) for u, v in itertools.combinations(graph.vertices, 2) if not graph.has_edge(u, v)
    ]
    triples = [] if graph.is_complete() else list(itertools.combinations(graph.vertices, 3))
    by_degree: dict = {}
    for v in graph.vertices:
        by_degree.setdefault(graph.degree(v), []).append(v)
    same_degree = [p for vs in by_degree.values() for p in itertools.combinations(vs, 2)]

    for _ in range(samples):
        x = rng.uniform(-box, box, n)
        fx = float(f(x))
        for u, v in non_edges:
            eu, ev = eye[u - 1], eye[v - 1]
            d2 = (f(x + eu + ev) - f(x + eu - ev) - f(x - eu + ev) + f(x - eu - ev)) / (4 * h * h)
            flag("non_edge_second", (u, v), d2, x, fx)
        for t in triples:
            es = [eye[w - 1] for w in t]
            acc = 0.0
            for signs in itertools.product((1, -1), repeat=3):
                acc += np.prod(signs) * f(x + sum(s * e for s, e in zip(signs, es)))
            flag("triple_third", t, acc / (8 * h**3), x, fx)
        a, b = rng.uniform(-box, box, 2)
        for u, v in same_degree:
            xs = x.copy()
            for w in set(graph.input_set(u)) | set(graph.input_set(v)):
                xs[w - 1] = b
            xs[u - 1] = xs[v - 1] = a
            fs = float(f(xs))
            hh = 1e-5
            du = (f(xs + np.eye(n)[u - 1] * hh) - f(xs - np.eye(n)[u - 1] * hh)) / (2 * hh)
            dv = (f(xs + np.eye(n)[v - 1] * hh) - f(xs - np.eye(n)[v - 1] * hh)) / (2 * hh)
            flag("same_degree_symmetry", (u, v), du - dv, xs, fs)
    return AdmissibilityReport(samples, sorted(worst.values(), key=lambda w: (w.check, w.vertices)))
