"""S1-invariant admissible functions on rings: equilibria, stability, ground states.

Phases live on the rescaled circle [0, 1). For a ring of ``n`` cells the
energy is ``h(theta) = sum_i delta(theta_i - theta_{i-1})`` with
``theta_0 = theta_n``. Differences are ``x_i = theta_{i+1} - theta_i (mod 1)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .coupling import PhaseCoupling, check_C1_C4
from .graph import CellGraph, GraphError, ring
from .spectra import Inertia, WeightedLaplacian, eigvalsh, inertia_of_eigenvalues, zero_threshold

EQ_RESIDUAL = 1e-10
MATCH_TOL = 1e-6


class RingError(ValueError):
    pass


@dataclass(frozen=True)
class RingFunction:
    n: int
    delta: PhaseCoupling

    def __post_init__(self):
        if self.n < 3:
            raise RingError("ring needs n >= 3")
        if not self.delta.even and self.n % 2:
            raise RingError("odd rings are not bipartite, so delta must be even")

    @property
    def graph(self) -> CellGraph:
        return ring(self.n)

    def _check(self, theta):
        theta = np.asarray(theta, float)
        if theta.shape[-1] != self.n:
            raise RingError(f"expected {self.n} phases, got shape {theta.shape}")
        return theta

    def energy(self, theta):
        theta = self._check(theta)
        return np.sum(self.delta(theta - np.roll(theta, 1, axis=-1)), axis=-1)

    # numerical plumbing shared with AdmissibleFunction
    evaluate = energy

    def gradient(self, theta):
        theta = self._check(theta)
        back = self.delta.d(theta - np.roll(theta, 1, axis=-1))  # delta'(theta_i - theta_{i-1})
        return back - np.roll(back, -1, axis=-1)

    def edge_weights(self, theta) -> np.ndarray:
        """``delta''(theta_{i+1} - theta_i)`` for the edge ``{i, i+1}``, i = 1..n."""
        theta = self._check(theta)
        return np.asarray(self.delta.dd(np.roll(theta, -1) - theta), float)

    def hessian(self, theta) -> WeightedLaplacian:
        g = self.graph
        w = self.edge_weights(theta)
        by_edge = {(min(i + 1, (i + 1) % self.n + 1), max(i + 1, (i + 1) % self.n + 1)): w[i] for i in range(self.n)}
        return WeightedLaplacian(g, tuple(float(by_edge[e]) for e in g.sorted_edges))

    def hessian_matrix(self, theta) -> np.ndarray:
        return self.hessian(theta).matrix


# -- symmetry ---------------------------------------------------------------


def differences(theta) -> np.ndarray:
    theta = np.asarray(theta, float)
    return np.mod(np.roll(theta, -1, axis=-1) - theta, 1.0)


def phases_from_differences(x) -> np.ndarray:
    """Gauge ``theta_1 = 0``; the last difference closes the ring."""
    x = np.asarray(x, float)
    return np.mod(np.concatenate([[0.0], np.cumsum(x[:-1])]), 1.0)


def torus_distance(a, b) -> np.ndarray:
    d = np.mod(np.asarray(a, float) - np.asarray(b, float), 1.0)
    return np.minimum(d, 1.0 - d)


def difference_orbit(x) -> np.ndarray:
    """Images of a difference vector under rotations, reflection and ``theta -> -theta``.

    Index reflection alone reverses and negates the differences; composing
    with phase negation (valid because delta is even) gives plain reversal.
    """
    x = np.mod(np.asarray(x, float), 1.0)
    n = len(x)
    rots = np.array([np.roll(x, -k) for k in range(n)])
    base = np.concatenate([rots, rots[:, ::-1]])
    return np.concatenate([base, np.mod(-base, 1.0)])


def symmetric_distance(x, y) -> float:
    """Smallest max-torus distance between difference vectors over the symmetry orbit."""
    orbit = difference_orbit(x)
    return float(np.min(np.max(torus_distance(orbit, np.asarray(y, float)[None, :]), axis=1)))


def canonical_differences(x, decimals: int = 9) -> tuple:
    orbit = np.mod(np.round(difference_orbit(x), decimals), 1.0)
    orbit = np.round(orbit, decimals)
    order = np.lexsort(orbit.T[::-1])
    return tuple(float(t) for t in orbit[order[0]])


def bracelets(n: int, ones: int) -> list[tuple[int, ...]]:
    """Binary strings of length n with ``ones`` ones, up to rotation and reversal."""
    seen = set()
    out = []
    for pos in itertools.combinations(range(n), ones):
        word = [0] * n
        for i in pos:
            word[i] = 1
        images = []
        for k in range(n):
            r = word[k:] + word[:k]
            images.append(tuple(r))
            images.append(tuple(r[::-1]))
        key = max(images)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return sorted(out, reverse=True)


# -- equilibria ---------------------------------------------------------------


@dataclass(frozen=True)
class RingEquilibrium:
    """One Table-style row: an equilibrium class modulo D_n x S1."""

    n: int
    isotropy: str  # "Dn", "Zn" or "trivial"
    m: int
    diffs: tuple
    energy: float
    weights: tuple
    eigenvalues: tuple
    inertia: tuple
    p: Optional[int] = None
    q: Optional[int] = None
    xi: Optional[float] = None
    eta: Optional[float] = None
    kind: str = "isotropy"  # "isotropy", "boundary" or "interior"
    family: bool = False
    pattern: Optional[tuple] = None
    residual: float = 0.0
    verdict: str = ""
    rule: str = ""
    rule_verdict: str = ""

    @property
    def theta(self) -> np.ndarray:
        return phases_from_differences(self.diffs)

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"

    @property
    def label(self) -> str:
        if self.isotropy == "Dn":
            return f"D{self.n}"
        if self.isotropy == "Zn":
            return f"Z{self.n}({Fraction(self.m, self.n)})"
        word = "".join("x" if b else "y" for b in self.pattern)
        tag = "family" if self.family else f"xi={self.xi:.6g},eta={self.eta:.6g}"
        return f"1[{word};{tag}]"

    def to_row(self) -> dict:
        nm, nz, npl = self.inertia
        return {
            "isotropy": self.label,
            "m": self.m,
            "p": "" if self.p is None else self.p,
            "q": "" if self.q is None else self.q,
            "xi": "" if self.xi is None else self.xi,
            "eta": "" if self.eta is None else self.eta,
            "energy": self.energy,
            "n_minus": nm,
            "n_zero": nz,
            "n_plus": npl,
            "stable": self.verdict,
            "rule": self.rule_verdict,
        }


ROW_COLUMNS = ("isotropy", "m", "p", "q", "xi", "eta", "energy", "n_minus", "n_zero", "n_plus", "stable", "rule")


def eigen_verdict(inr: Inertia) -> str:
    if inr.n_minus > 0:
        return "unstable"
    if inr.n_zero > 1:
        return "degenerate"
    return "stable"


def _curvature_split(delta: PhaseCoupling, grid: int = 2048) -> float:
    """The point ``u*`` in (0, 1/2) where delta'' changes sign."""
    u = np.linspace(0.0, 0.5, grid + 1)[1:-1]
    v = delta.dd(u)
    idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    if len(idx) != 1:
        raise RingError(f"delta'' should change sign once on (0, 1/2), found {len(idx)} changes")
    i = idx[0]
    return brentq(lambda t: float(delta.dd(t)), u[i], u[i + 1], xtol=1e-15)


def _partner(delta: PhaseCoupling, xi: float, ustar: float) -> float:
    """The ``eta`` in (0, u*) with ``delta'(eta) = delta'(xi)`` for ``xi`` in (u*, 1/2)."""
    target = float(delta.d(xi))
    fn = lambda t: float(delta.d(t)) - target
    lo, hi = 0.0, ustar
    if fn(lo) * fn(hi) > 0:
        raise RingError(f"no partner for xi={xi}")
    return brentq(fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _check_conditions(delta: PhaseCoupling, strict: bool):
    rep = check_C1_C4(delta)
    if strict and not rep.all:
        failed = [c for c in ("c1", "c2", "c3", "c4") if not getattr(rep, c)]
        raise RingError(f"coupling fails {', '.join(failed).upper()}; pass strict=False to relax C3")
    if not strict and not (rep.c1 and rep.c2 and rep.c4 and rep.single_curvature_change):
        raise RingError("coupling needs C1, C2, C4 and a single sign change of delta''")
    return rep


def _build(rf: RingFunction, diffs, **kw) -> RingEquilibrium:
    diffs = np.mod(np.asarray(diffs, float), 1.0)
    theta = phases_from_differences(diffs)
    resid = float(np.max(np.abs(rf.gradient(theta))))
    if resid > EQ_RESIDUAL:
        raise RingError(f"enumerated point fails the equilibrium test: residual {resid:.3g}")
    w = rf.edge_weights(theta)
    eigs = rf.hessian(theta).eigenvalues()
    inr = inertia_of_eigenvalues(eigs)
    eq = RingEquilibrium(
        n=rf.n,
        diffs=tuple(float(t) for t in diffs),
        energy=float(rf.energy(theta)),
        weights=tuple(float(t) for t in w),
        eigenvalues=tuple(float(t) for t in eigs),
        inertia=inr.as_tuple(),
        residual=resid,
        verdict=eigen_verdict(inr),
        **kw,
    )
    rule, rv = stability_rule(eq, rf)
    return _replace(eq, rule=rule, rule_verdict=rv)


def _replace(eq: RingEquilibrium, **kw) -> RingEquilibrium:
    from dataclasses import replace

    return replace(eq, **kw)


def enumerate_equilibria(rf: RingFunction, strict: bool = True, grid: int = 400) -> list[RingEquilibrium]:
    """All equilibrium classes of the ring energy modulo D_n x S1.

    With ``strict=False`` the monotonicity condition on delta'' is relaxed to
    a single sign change on (0, 1/2), which is all the enumeration uses.
    """
    delta, n = rf.delta, rf.n
    _check_conditions(delta, strict)
    out = []

    for m in range(0, n // 2 + 1):
        iso = "Dn" if m == 0 else "Zn"
        out.append(_build(rf, [m / n] * n, isotropy=iso, m=m))

    # differences in {0, 1/2}: p halves (xi = 1/2), q zeros (eta = 0), p even
    for p in range(2, n, 2):
        for word in bracelets(n, p):
            diffs = [0.5 if b else 0.0 for b in word]
            out.append(
                _build(rf, diffs, isotropy="trivial", m=p // 2, p=p, q=n - p, xi=0.5, eta=0.0, kind="boundary", pattern=word)
            )

    # interior: eta < u* < xi with delta'(xi) = delta'(eta) and p xi + q eta = m
    ustar = _curvature_split(delta)
    xs = np.linspace(ustar, 0.5, grid + 1)[1:-1]
    etas = np.array([_partner(delta, x, ustar) for x in xs])
    for p in range(1, n):
        q = n - p
        for m in range(1, (n + 1) // 2 + 1):
            gv = p * xs + q * etas - m
            if np.max(np.abs(gv)) <= 1e-10 * n:
                xi = 0.5 * (ustar + 0.5)
                roots = [(xi, True)]
            else:
                roots = []
                sg = np.sign(gv)
                for i in np.nonzero(sg[:-1] * sg[1:] < 0)[0]:
                    fn = lambda x: p * x + q * _partner(delta, x, ustar) - m
                    roots.append((brentq(fn, xs[i], xs[i + 1], xtol=1e-15), False))
                for i in np.nonzero(gv == 0.0)[0]:
                    roots.append((float(xs[i]), False))
            for xi, fam in roots:
                eta = _partner(delta, xi, ustar)
                for word in bracelets(n, p):
                    diffs = [xi if b else eta for b in word]
                    out.append(
                        _build(
                            rf,
                            diffs,
                            isotropy="trivial",
                            m=m,
                            p=p,
                            q=q,
                            xi=float(xi),
                            eta=float(eta),
                            kind="interior",
                            family=fam,
                            pattern=word,
                        )
                    )
    return out


# -- stability ---------------------------------------------------------------


def stability_rule(eq: RingEquilibrium, rf: RingFunction) -> tuple[str, str]:
    """Closed-form stability rule for an equilibrium class.

    Returns ``(rule_name, verdict)`` where verdict is ``stable``,
    ``unstable``, ``degenerate`` or ``defer`` (the rule is only necessary).
    """
    delta = rf.delta
    scale = max(1.0, abs(float(delta.dd(0.0))), abs(float(delta.dd(0.5))))
    if eq.isotropy in ("Dn", "Zn"):
        c = float(delta.dd(eq.m / eq.n))
        name = "sync" if eq.isotropy == "Dn" else ("half" if 2 * eq.m == eq.n else "zn")
        if abs(c) <= 1e-9 * scale:
            return name, "degenerate"
        return name, "stable" if c > 0 else "unstable"
    # negative-weight edges split the positive subgraph; stability needs at most one
    negatives = sum(1 for w in eq.weights if w < -1e-9 * scale)
    name = "frustration" if eq.kind == "boundary" else "interior"
    if negatives >= 2:
        return name, "unstable"
    return name, "defer"


@dataclass(frozen=True)
class StabilityVerdict:
    rule: str
    rule_verdict: str
    eigen_verdict: str
    inertia: tuple

    @property
    def agree(self) -> bool:
        return self.rule_verdict == "defer" or self.rule_verdict == self.eigen_verdict

    @property
    def verdict(self) -> str:
        return self.eigen_verdict


def classify_stability(eq: RingEquilibrium, rf: RingFunction) -> StabilityVerdict:
    theta = eq.theta
    inr = rf.hessian(theta).inertia()
    rule, rv = stability_rule(eq, rf)
    return StabilityVerdict(rule, rv, eigen_verdict(inr), inr.as_tuple())


def zero_mode_alignment(rf: RingFunction, theta) -> tuple[float, float]:
    """Smallest |eigenvalue| and the angle between ``1/sqrt(n)`` and the near-null eigenspace.

    The eigenspace collects every eigenvalue within 1e-9 of zero, so classes
    with extra zero modes are handled without picking an arbitrary vector.
    """
    h = rf.hessian_matrix(theta)
    w, v = np.linalg.eigh(h)
    k = int(np.argmin(np.abs(w)))
    closest = float(abs(w[k]))
    null = np.abs(w) <= max(1e-9, closest)
    basis = v[:, null]
    ones = np.ones(rf.n) / math.sqrt(rf.n)
    proj = basis @ (basis.T @ ones)
    return closest, math.atan2(float(np.linalg.norm(ones - proj)), float(np.linalg.norm(proj)))


# -- matching and ground states ---------------------------------------------


def match_equilibrium(theta, equilibria: list[RingEquilibrium], rf: RingFunction, tol: float = MATCH_TOL):
    """The enumerated class containing ``theta``, or ``None``."""
    x = differences(theta)
    best, best_d = None, math.inf
    for eq in equilibria:
        if eq.family:
            continue
        d = symmetric_distance(eq.diffs, x)
        if d < best_d:
            best, best_d = eq, d
    if best is not None and best_d <= tol:
        return best
    for eq in equilibria:
        if eq.family and _in_family(x, eq, rf, tol):
            return eq
    return None


def _in_family(x, eq: RingEquilibrium, rf: RingFunction, tol: float) -> bool:
    """Membership in a continuum family: two values related by delta', same arrangement and winding."""
    for y in difference_orbit(x):
        if np.any(y > 0.5 + tol):
            continue
        hi = y > 0.5 * (y.min() + y.max())
        if not np.array_equal(hi.astype(int), np.array(eq.pattern)):
            continue
        xi, eta = float(np.mean(y[hi])), float(np.mean(y[~hi]))
        if np.max(np.abs(y[hi] - xi)) > tol or np.max(np.abs(y[~hi] - eta)) > tol:
            continue
        if abs(float(rf.delta.d(xi)) - float(rf.delta.d(eta))) > tol * 1e2:
            continue
        if abs(eq.p * xi + eq.q * eta - eq.m) <= tol * rf.n:
            return True
    return False


def ground_state_formula(rf: RingFunction) -> tuple[np.ndarray, float]:
    n = rf.n
    step = 0.5 if n % 2 == 0 else 0.5 - 1.0 / (2 * n)
    diffs = np.full(n, step)
    return diffs, float(rf.energy(phases_from_differences(diffs)))


@dataclass
class GroundStateReport:
    n: int
    formula_diffs: tuple
    formula_energy: float
    empirical_diffs: tuple
    empirical_energy: float
    enumerated_energy: Optional[float]
    starts: int
    converged: int
    distance: float
    details: dict = field(default_factory=dict)

    def agrees(self, energy_tol: float = 1e-6, diff_tol: float = 1e-6) -> bool:
        return abs(self.empirical_energy - self.formula_energy) <= energy_tol and self.distance <= diff_tol

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "formula_diffs": list(self.formula_diffs),
            "formula_energy": self.formula_energy,
            "empirical_diffs": list(self.empirical_diffs),
            "empirical_energy": self.empirical_energy,
            "enumerated_energy": self.enumerated_energy,
            "starts": self.starts,
            "converged": self.converged,
            "distance": self.distance,
            "agree": self.agrees(),
        }


def ground_state(rf: RingFunction, starts: int = 200, seed: int = 0, cfg=None, strict: bool = True) -> GroundStateReport:
    """Formula ground state cross-checked by multistart gradient flow.

    The odd-n formula is only claimed for large n, so the empirical minimum is
    always reported next to it.
    """
    from .flow import FlowConfig, multistart_minimize

    _check_conditions(rf.delta, strict)
    cfg = cfg or FlowConfig(torus=True)
    fd, fe = ground_state_formula(rf)
    res = multistart_minimize(rf, None, starts, cfg, seed=seed, distance=symmetric_distance, key=differences)
    best = res.best
    emp = differences(best.x)
    try:
        enum_e = min(eq.energy for eq in enumerate_equilibria(rf, strict=strict) if eq.verdict == "stable")
    except ValueError:
        enum_e = None
    return GroundStateReport(
        n=rf.n,
        formula_diffs=tuple(float(t) for t in fd),
        formula_energy=fe,
        empirical_diffs=canonical_differences(emp),
        empirical_energy=float(best.energy),
        enumerated_energy=enum_e,
        starts=starts,
        converged=res.converged,
        distance=symmetric_distance(fd, emp),
        details={"clusters": len(res.clusters)},
    )


# -- general graphs -----------------------------------------------------------


def bipartite_s1_hessian(g: CellGraph, delta: PhaseCoupling, theta, orient: int = 1) -> WeightedLaplacian:
    """Hessian of an S1-invariant admissible function as a weighted Laplacian.

    On a bipartite graph each edge is read from the part ``orient`` towards the
    other, with weight ``delta''(theta_i - theta_j)``. Non-bipartite graphs
    need an even delta, and orientation is then irrelevant.
    """
    theta = np.asarray(theta, float)
    if theta.shape != (g.n,):
        raise GraphError(f"expected {g.n} phases")
    if orient not in (1, 2):
        raise GraphError("orient must be 1 or 2")
    bp = g.bipartition()
    if bp is None and not delta.even:
        raise GraphError("non-bipartite graphs need an even coupling")
    ws = []
    for u, v in g.sorted_edges:
        if bp is not None and bp.side(u) != orient:
            u, v = v, u
        ws.append(float(delta.dd(theta[u - 1] - theta[v - 1])))
    return WeightedLaplacian(g, tuple(ws))


def s1_gradient(g: CellGraph, delta: PhaseCoupling, theta, orient: int = 1) -> np.ndarray:
    theta = np.asarray(theta, float)
    bp = g.bipartition()
    grad = np.zeros(g.n)
    for u, v in g.sorted_edges:
        if bp is not None and bp.side(u) != orient:
            u, v = v, u
        d = float(delta.d(theta[u - 1] - theta[v - 1]))
        grad[u - 1] += d
        grad[v - 1] -= d
    return grad


def frustrated_pattern() -> np.ndarray:
    """Five-cell frustrated state: four anti-aligned neighbour pairs, one aligned pair."""
    return phases_from_differences([0.5, 0.5, 0.5, 0.5, 0.0])
