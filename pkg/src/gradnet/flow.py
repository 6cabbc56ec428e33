"""Gradient-flow integration ``x' = -grad f`` and multistart minimisation.

Target objects expose batched ``evaluate(x)`` and ``gradient(x)`` over the
last axis (both :class:`AdmissibleFunction` and :class:`RingFunction` do).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

INTEGRATORS = ("rk4", "adaptive")


class FlowError(RuntimeError):
    pass


@dataclass(frozen=True)
class FlowConfig:
    integrator: str = "rk4"
    h: float = 1e-2
    T: float = 1e4
    tol: float = 1e-10
    torus: bool = False
    max_halvings: int = 40
    uphill_slack: float = 1e-12

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise FlowError(f"integrator must be one of {INTEGRATORS}")
        if self.h <= 0 or self.tol <= 0 or self.T <= 0:
            raise FlowError("h, tol and T must be positive")


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    energy: np.ndarray
    grad_norm: np.ndarray
    status: str  # converged | max_time | diverged

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def rows(self) -> list[list[float]]:
        return [
            [float(t), *map(float, x), float(e), float(g)]
            for t, x, e, g in zip(self.t, self.x, self.energy, self.grad_norm)
        ]


def _rk4_step(f, x, h):
    k1 = -f.gradient(x)
    k2 = -f.gradient(x + 0.5 * h[:, None] * k1)
    k3 = -f.gradient(x + 0.5 * h[:, None] * k2)
    k4 = -f.gradient(x + h[:, None] * k3)
    return x + (h[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def flow_batch(f, x0: np.ndarray, cfg: FlowConfig, record_every: Optional[int] = None):
    """Fixed-step RK4 on a batch of starts with per-row step halving.

    A step that raises the energy is rejected and retried with half the step
    for that row only. Rows leave the batch once ``|grad f|_inf <= tol``.
    Returns final states, statuses, times and (optionally) the recorded samples
    of row 0.
    """
    x = np.array(x0, float, copy=True)
    if x.ndim != 2:
        raise FlowError("flow_batch expects a 2-d array of starts")
    b = x.shape[0]
    t = np.zeros(b)
    h = np.full(b, cfg.h)
    status = np.array(["max_time"] * b, dtype=object)
    active = np.ones(b, bool)
    energy = np.asarray(f.evaluate(x), float)
    samples = []
    step = 0

    def record():
        g0 = np.max(np.abs(f.gradient(x[:1])))
        samples.append((t[0], x[0].copy(), float(energy[0]), float(g0)))

    if record_every:
        record()
    while np.any(active):
        idx = np.nonzero(active)[0]
        xa = x[idx]
        gn = np.max(np.abs(f.gradient(xa)), axis=1)
        done = gn <= cfg.tol
        if np.any(done):
            status[idx[done]] = "converged"
            active[idx[done]] = False
        bad = ~np.isfinite(gn) | (np.max(np.abs(xa), axis=1) > 1e12)
        if np.any(bad & ~done):
            status[idx[bad & ~done]] = "diverged"
            active[idx[bad & ~done]] = False
        timeout = t[idx] >= cfg.T
        active[idx[timeout & ~done & ~bad]] = False
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        xa, ha, ea = x[idx], h[idx], energy[idx]
        pending = np.ones(len(idx), bool)
        new_x, new_e = xa.copy(), ea.copy()
        for _ in range(cfg.max_halvings + 1):
            sub = np.nonzero(pending)[0]
            cand = _rk4_step(f, xa[sub], ha[sub])
            if cfg.torus:
                cand = np.mod(cand, 1.0)
            ce = np.asarray(f.evaluate(cand), float)
            ok = np.isfinite(ce) & (ce <= ea[sub] + cfg.uphill_slack * (1.0 + np.abs(ea[sub])))
            new_x[sub[ok]], new_e[sub[ok]] = cand[ok], ce[ok]
            pending[sub[ok]] = False
            ha[sub[~ok]] *= 0.5
            if not np.any(pending):
                break
        if np.any(pending):
            status[idx[pending]] = "diverged"
            active[idx[pending]] = False
        moved = ~pending
        x[idx[moved]] = new_x[moved]
        energy[idx[moved]] = new_e[moved]
        t[idx[moved]] += ha[moved]
        h[idx] = ha
        step += 1
        if record_every and active[0] and step % record_every == 0:
            record()
    if record_every:
        record()
    return x, status, t, samples


def _adaptive(f, x0, cfg: FlowConfig, record_every: Optional[int]):
    n = len(x0)

    def rhs(_t, y):
        return -f.gradient(y)

    def small_grad(_t, y):
        return np.max(np.abs(f.gradient(y))) - cfg.tol

    small_grad.terminal = True
    sol = solve_ivp(rhs, (0.0, cfg.T), np.asarray(x0, float), method="RK45", rtol=1e-10, atol=1e-13, events=small_grad)
    xs = sol.y.T
    if cfg.torus:
        xs = np.mod(xs, 1.0)
    e = np.asarray(f.evaluate(xs), float)
    g = np.max(np.abs(f.gradient(xs)), axis=1)
    if not np.all(np.isfinite(g)):
        status = "diverged"
    elif g[-1] <= cfg.tol * 1.0001:
        status = "converged"
    else:
        status = "max_time"
    keep = np.arange(len(sol.t))
    if record_every and record_every > 1:
        keep = np.unique(np.concatenate([keep[::record_every], [len(keep) - 1]]))
    return Trajectory(sol.t[keep], xs[keep].reshape(-1, n), e[keep], g[keep], status)


def integrate(f, x0, cfg: Optional[FlowConfig] = None, record_every: int = 10) -> Trajectory:
    cfg = cfg or FlowConfig()
    x0 = np.asarray(x0, float)
    if x0.ndim != 1 or x0.shape[0] != _dimension(f):
        raise FlowError(f"x0 must have length {_dimension(f)}")
    if cfg.integrator == "adaptive":
        return _adaptive(f, x0, cfg, record_every)
    _, status, _, samples = flow_batch(f, x0[None, :], cfg, record_every=max(1, record_every))
    ts, xs, es, gs = zip(*samples)
    return Trajectory(np.array(ts), np.array(xs), np.array(es), np.array(gs), str(status[0]))


def _dimension(f) -> int:
    return f.n


# -- multistart ---------------------------------------------------------------


@dataclass
class Cluster:
    x: np.ndarray
    energy: float
    count: int
    members: list = field(default_factory=list)


@dataclass
class MultistartResult:
    clusters: list
    starts: int
    converged: int
    statuses: list
    terminals: np.ndarray

    @property
    def best(self) -> Cluster:
        return self.clusters[0]

    def histogram(self) -> list[dict]:
        return [
            {"energy": c.energy, "count": c.count, "x": [float(t) for t in c.x]}
            for c in self.clusters
        ]


def sample_starts(n: int, starts: int, seed: int, domain=None, torus: bool = False) -> np.ndarray:
    """One independent generator per start, spawned from ``seed``."""
    if domain is None:
        lo, hi = (0.0, 1.0) if torus else (-1.0, 1.0)
    else:
        lo, hi = map(float, domain)
    seqs = np.random.SeedSequence(seed).spawn(starts)
    return np.array([np.random.default_rng(s).uniform(lo, hi, n) for s in seqs])


def euclidean_distance(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def multistart_minimize(
    f,
    domain,
    starts: int,
    cfg: Optional[FlowConfig] = None,
    seed: int = 0,
    distance: Callable = euclidean_distance,
    key: Optional[Callable] = None,
    merge_radius: float = 1e-5,
) -> MultistartResult:
    """Run ``starts`` seeded flows and cluster converged terminals by energy.

    ``key`` maps a terminal to the coordinates compared by ``distance``
    (for rings: phase differences, compared modulo the ring symmetries).
    """
    if starts < 1:
        raise FlowError("starts must be >= 1")
    cfg = cfg or FlowConfig()
    x0 = sample_starts(_dimension(f), starts, seed, domain, cfg.torus)
    xs, status, _, _ = flow_batch(f, x0, cfg)
    ok = np.nonzero(status == "converged")[0]
    if len(ok) == 0:
        raise FlowError("no start converged")
    energies = np.asarray(f.evaluate(xs), float)
    key = key or (lambda z: z)
    clusters: list[Cluster] = []
    for i in sorted(ok, key=lambda j: (energies[j], j)):
        ki = key(xs[i])
        for c in clusters:
            if distance(key(c.x), ki) <= merge_radius:
                c.count += 1
                c.members.append(int(i))
                break
        else:
            clusters.append(Cluster(xs[i].copy(), float(energies[i]), 1, [int(i)]))
    clusters.sort(key=lambda c: (c.energy, -c.count))
    return MultistartResult(clusters, starts, len(ok), [str(s) for s in status], xs)
