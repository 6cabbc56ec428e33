"""Coupling functions, self-connections and phase couplings.

All evaluators are vectorised over numpy arrays: a coupling receives two
arrays of equal shape (one entry per edge, or per sample) and returns an array
of that shape. Cells are one-dimensional unless stated otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.optimize import brentq

Array = np.ndarray

FD_STEP = 1e-5
FD_STEP2 = 1e-4


class CouplingError(ValueError):
    pass


def _cd1(f, x, h=FD_STEP):
    return (f(x + h) - f(x - h)) / (2 * h)


def _cd2(f, x, h=FD_STEP2):
    return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)


@dataclass(frozen=True)
class CouplingFunction:
    """A smooth two-cell interaction ``phi(x, y)`` with partial derivatives.

    Missing derivatives fall back to central finite differences. For a
    Z2-invariant coupling only ``d1`` needs supplying: ``d2(x, y) = d1(y, x)``.
    """

    phi: Callable[[Array, Array], Array]
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None
    d11: Optional[Callable] = None
    d12: Optional[Callable] = None
    d22: Optional[Callable] = None
    z2_invariant: bool = False
    k: int = 1
    name: str = "coupling"

    def __call__(self, x, y):
        return self.phi(np.asarray(x, float), np.asarray(y, float))

    def p1(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if self.d1 is not None:
            return self.d1(x, y)
        if self.z2_invariant and self.d2 is not None:
            return self.d2(y, x)
        return _cd1(lambda t: self.phi(t, y), x)

    def p2(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if self.d2 is not None:
            return self.d2(x, y)
        if self.z2_invariant and self.d1 is not None:
            return self.d1(y, x)
        return _cd1(lambda t: self.phi(x, t), y)

    def p11(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if self.d11 is not None:
            return self.d11(x, y)
        if self.z2_invariant and self.d22 is not None:
            return self.d22(y, x)
        if self.d1 is not None:
            return _cd1(lambda t: self.d1(t, y), x)
        return _cd2(lambda t: self.phi(t, y), x)

    def p22(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if self.d22 is not None:
            return self.d22(x, y)
        if self.z2_invariant:
            return self.p11(y, x)
        if self.d2 is not None:
            return _cd1(lambda t: self.d2(x, t), y)
        return _cd2(lambda t: self.phi(x, t), y)

    def p12(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if self.d12 is not None:
            return self.d12(x, y)
        if self.d1 is not None:
            return _cd1(lambda t: self.d1(x, t), y)
        h = FD_STEP2
        return (
            self.phi(x + h, y + h) - self.phi(x + h, y - h) - self.phi(x - h, y + h) + self.phi(x - h, y - h)
        ) / (4 * h * h)

    def hessian2(self, x: float, y: float) -> np.ndarray:
        """2x2 Hessian of the coupling itself at ``(x, y)``."""
        a, b, c = float(self.p11(x, y)), float(self.p12(x, y)), float(self.p22(x, y))
        return np.array([[a, b], [b, c]])

    def __add__(self, other: "CouplingFunction") -> "CouplingFunction":
        if not isinstance(other, CouplingFunction):
            return NotImplemented
        if self.k != other.k:
            raise CouplingError("cannot add couplings of different cell dimension")
        fs = (self, other)
        return CouplingFunction(
            phi=lambda x, y: self.phi(x, y) + other.phi(x, y),
            d1=lambda x, y: fs[0].p1(x, y) + fs[1].p1(x, y),
            d2=lambda x, y: fs[0].p2(x, y) + fs[1].p2(x, y),
            d11=lambda x, y: fs[0].p11(x, y) + fs[1].p11(x, y),
            d12=lambda x, y: fs[0].p12(x, y) + fs[1].p12(x, y),
            d22=lambda x, y: fs[0].p22(x, y) + fs[1].p22(x, y),
            z2_invariant=self.z2_invariant and other.z2_invariant,
            k=self.k,
            name=f"{self.name}+{other.name}",
        )

    def z2_defect(self, samples: int = 64, seed: int = 0, scale: float = 2.0) -> float:
        """Largest ``|phi(x, y) - phi(y, x)|`` over random sample points."""
        rng = np.random.default_rng(seed)
        x, y = rng.uniform(-scale, scale, (2, samples))
        return float(np.max(np.abs(self.phi(x, y) - self.phi(y, x))))


@dataclass(frozen=True)
class SelfConnection:
    """Per-cell term ``alpha_d`` shared by all cells of degree ``d``."""

    degree: int
    f: Callable[[Array], Array]
    df: Optional[Callable] = None
    ddf: Optional[Callable] = None

    def __call__(self, x):
        return self.f(np.asarray(x, float))

    def d(self, x):
        x = np.asarray(x, float)
        return self.df(x) if self.df is not None else _cd1(self.f, x)

    def dd(self, x):
        x = np.asarray(x, float)
        if self.ddf is not None:
            return self.ddf(x)
        if self.df is not None:
            return _cd1(self.df, x)
        return _cd2(self.f, x)


def polynomial_self(degree: int, coeffs) -> SelfConnection:
    """``alpha(x) = sum_i coeffs[i] x**i`` with exact derivatives."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, float))
    dp, ddp = p.deriv(1), p.deriv(2)
    return SelfConnection(degree, p, dp, ddp)


# -- polynomial couplings --------------------------------------------------


def _poly_eval(terms, x, y, dx=0, dy=0):
    out = np.zeros(np.broadcast(x, y).shape)
    for (i, j), c in terms.items():
        if i < dx or j < dy:
            continue
        ci = math.perm(i, dx) * math.perm(j, dy) * c
        out = out + ci * x ** (i - dx) * y ** (j - dy)
    return out


def polynomial_coupling(coeffs, z2: bool = False, mixed_only: bool = False) -> CouplingFunction:
    """Bivariate polynomial ``sum c * x**i * y**j`` (cells of dimension one).

    ``coeffs`` maps ``(i, j)`` to ``c`` (a dict, or an iterable of
    ``(i, j, c)`` triples). ``z2=True`` demands ``c[i, j] == c[j, i]``.
    ``mixed_only=True`` rejects monomials in a single variable.
    """
    if isinstance(coeffs, Mapping):
        items = [(int(i), int(j), float(c)) for (i, j), c in coeffs.items()]
    else:
        items = [(int(i), int(j), float(c)) for i, j, c in coeffs]
    terms: dict[tuple[int, int], float] = {}
    for i, j, c in items:
        if i < 0 or j < 0:
            raise CouplingError(f"negative exponent in term ({i}, {j})")
        terms[(i, j)] = terms.get((i, j), 0.0) + c
    terms = {key: c for key, c in terms.items() if c != 0.0}
    if z2:
        for (i, j), c in terms.items():
            if terms.get((j, i), 0.0) != c:
                raise CouplingError(
                    f"coefficients not symmetric: c[{i},{j}]={c} vs c[{j},{i}]={terms.get((j, i), 0.0)}"
                )
    if mixed_only:
        pure = [key for key in terms if key[0] == 0 or key[1] == 0]
        if pure:
            raise CouplingError(f"coupling contains single-variable monomials {sorted(pure)}")
    frozen = dict(terms)
    return CouplingFunction(
        phi=lambda x, y: _poly_eval(frozen, x, y),
        d1=lambda x, y: _poly_eval(frozen, x, y, 1, 0),
        d2=lambda x, y: _poly_eval(frozen, x, y, 0, 1),
        d11=lambda x, y: _poly_eval(frozen, x, y, 2, 0),
        d12=lambda x, y: _poly_eval(frozen, x, y, 1, 1),
        d22=lambda x, y: _poly_eval(frozen, x, y, 0, 2),
        z2_invariant=z2,
        name="polynomial",
    )


def quadratic_coupling(alpha: float, beta: float, x0: float = 0.0) -> CouplingFunction:
    """Z2-invariant quadratic with ``phi_11 = alpha`` and ``phi_12 = beta``.

    ``phi(x, y) = alpha/2 ((x-x0)^2 + (y-x0)^2) + beta (x-x0)(y-x0)``, so
    ``(x0, x0)`` is a critical point.
    """
    a, b = float(alpha), float(beta)
    return CouplingFunction(
        phi=lambda x, y: 0.5 * a * ((x - x0) ** 2 + (y - x0) ** 2) + b * (x - x0) * (y - x0),
        d1=lambda x, y: a * (x - x0) + b * (y - x0),
        d2=lambda x, y: a * (y - x0) + b * (x - x0),
        d11=lambda x, y: np.full(np.broadcast(x, y).shape, a),
        d12=lambda x, y: np.full(np.broadcast(x, y).shape, b),
        d22=lambda x, y: np.full(np.broadcast(x, y).shape, a),
        z2_invariant=True,
        name=f"quadratic(alpha={a},beta={b})",
    )


# -- phase couplings -------------------------------------------------------


@dataclass(frozen=True)
class PhaseCoupling:
    """A 1-periodic ``delta`` on the circle (rescaled to [0, 1))."""

    f: Callable[[Array], Array]
    df: Optional[Callable] = None
    ddf: Optional[Callable] = None
    even: bool = True
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, u):
        return self.f(np.asarray(u, float))

    def d(self, u):
        u = np.asarray(u, float)
        return self.df(u) if self.df is not None else _cd1(self.f, u)

    def dd(self, u):
        u = np.asarray(u, float)
        if self.ddf is not None:
            return self.ddf(u)
        if self.df is not None:
            return _cd1(self.df, u)
        return _cd2(self.f, u)

    def as_coupling(self) -> CouplingFunction:
        """The two-cell coupling ``phi(x, y) = delta(x - y)``."""
        return CouplingFunction(
            phi=lambda x, y: self.f(x - y),
            d1=lambda x, y: self.d(x - y),
            d2=lambda x, y: -self.d(x - y),
            d11=lambda x, y: self.dd(x - y),
            d12=lambda x, y: -self.dd(x - y),
            d22=lambda x, y: self.dd(x - y),
            z2_invariant=self.even,
            name=f"phase:{self.family}",
        )

    def to_json(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}


TWO_PI = 2.0 * math.pi


def builtin_phase_family(name: str, params: Optional[dict] = None) -> PhaseCoupling:
    """Built-in phase couplings with analytic derivatives.

    ``cosine``: ``a cos(2 pi u)``; ``two_harmonic``: ``a cos(2 pi u) + b cos(4 pi u)``;
    ``shifted_cosine``: ``a cos(2 pi (u - s))``, not even unless ``2s`` is an integer.
    """
    params = dict(params or {})
    if name == "cosine":
        a = float(params.setdefault("a", 1.0))
        return PhaseCoupling(
            f=lambda u: a * np.cos(TWO_PI * u),
            df=lambda u: -a * TWO_PI * np.sin(TWO_PI * u),
            ddf=lambda u: -a * TWO_PI**2 * np.cos(TWO_PI * u),
            even=True,
            family=name,
            params=params,
        )
    if name == "two_harmonic":
        a = float(params.setdefault("a", 1.0))
        b = float(params.setdefault("b", 0.0))
        w = 2 * TWO_PI
        return PhaseCoupling(
            f=lambda u: a * np.cos(TWO_PI * u) + b * np.cos(w * u),
            df=lambda u: -a * TWO_PI * np.sin(TWO_PI * u) - b * w * np.sin(w * u),
            ddf=lambda u: -a * TWO_PI**2 * np.cos(TWO_PI * u) - b * w**2 * np.cos(w * u),
            even=True,
            family=name,
            params=params,
        )
    if name == "shifted_cosine":
        a = float(params.setdefault("a", 1.0))
        s = float(params.setdefault("s", 0.0))
        return PhaseCoupling(
            f=lambda u: a * np.cos(TWO_PI * (u - s)),
            df=lambda u: -a * TWO_PI * np.sin(TWO_PI * (u - s)),
            ddf=lambda u: -a * TWO_PI**2 * np.cos(TWO_PI * (u - s)),
            even=float(2 * s).is_integer(),
            family=name,
            params=params,
        )
    raise CouplingError(f"unknown phase family {name!r}")


@dataclass(frozen=True)
class ConditionReport:
    """Sampled check of the ring conditions C1-C4.

    Grid checks cannot prove the conditions; every flag is a sampled verdict.
    """

    c1: bool
    c2: bool
    c3: bool
    c4: bool
    grid_size: int
    details: dict
    sampled: bool = True

    @property
    def all(self) -> bool:
        return self.c1 and self.c2 and self.c3 and self.c4

    @property
    def single_curvature_change(self) -> bool:
        """``delta''`` changes sign exactly once on (0, 1/2)."""
        return self.details.get("dd_sign_changes") == 1


def check_C1_C4(delta: PhaseCoupling, grid_size: int = 1024, tol: float = 1e-9) -> ConditionReport:
    if grid_size < 64:
        raise CouplingError("grid_size must be at least 64")
    details: dict = {}
    u = np.linspace(0.0, 1.0, grid_size + 1)
    scale = max(1.0, float(np.max(np.abs(delta(u)))))

    period_err = float(np.max(np.abs(delta(u + 1.0) - delta(u))))
    even_err = float(np.max(np.abs(delta(1.0 - u) - delta(u))))
    details["periodicity_error"] = period_err
    details["evenness_error"] = even_err
    c1 = period_err <= tol * scale and even_err <= tol * scale

    # C2: delta' vanishes at 0 and 1/2 and nowhere in between
    dscale = max(1.0, float(np.max(np.abs(delta.d(u)))))
    end_vals = np.abs(delta.d(np.array([0.0, 0.5])))
    details["d_at_0_and_half"] = end_vals.tolist()
    inner = np.linspace(0.0, 0.5, grid_size + 1)[1:-1]
    dv = delta.d(inner)
    roots = _sign_change_roots(delta.d, inner, dv)
    near_zero = inner[np.abs(dv) <= 1e-7 * dscale]
    details["d_interior_zeros"] = roots + [float(t) for t in near_zero]
    c2 = bool(np.all(end_vals <= 1e-7 * dscale)) and not details["d_interior_zeros"]

    ddv = delta.dd(inner)
    steps = np.diff(ddv)
    ddscale = max(1.0, float(np.max(np.abs(ddv))))
    slack = 1e-9 * ddscale
    increasing = bool(np.all(steps >= -slack))
    decreasing = bool(np.all(steps <= slack))
    details["dd_monotone"] = "increasing" if increasing else "decreasing" if decreasing else "no"
    c3 = increasing or decreasing
    details["dd_sign_changes"] = len(_sign_change_roots(delta.dd, inner, ddv))

    dd0, ddh = float(delta.dd(0.0)), float(delta.dd(0.5))
    details["dd_at_0"] = dd0
    details["dd_at_half"] = ddh
    c4 = dd0 < 0 < ddh
    return ConditionReport(c1, c2, c3, c4, grid_size, details)


def _sign_change_roots(fn, grid, values) -> list[float]:
    """Bisection-refined roots where ``values`` changes sign along ``grid``."""
    out = []
    s = np.sign(values)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        a, b = float(grid[i]), float(grid[i + 1])
        out.append(brentq(lambda t: float(fn(t)), a, b, xtol=1e-14))
    return out


def coupling_from_spec(spec: dict) -> CouplingFunction:
    """Build a coupling from its JSON description.

    ``{"family": "cosine"|"two_harmonic"|"shifted_cosine"|"polynomial"|"quadratic",
    "params": {...}, "z2": bool}``. Phase families give ``phi(x, y) = delta(x - y)``.
    """
    family = spec.get("family")
    params = spec.get("params", {})
    if family == "polynomial":
        terms = params.get("terms")
        if terms is None:
            raise CouplingError("polynomial coupling needs params.terms = [[i, j, c], ...]")
        return polynomial_coupling(terms, z2=bool(spec.get("z2", False)),
                                   mixed_only=bool(params.get("mixed_only", False)))
    if family == "quadratic":
        return quadratic_coupling(params["alpha"], params["beta"], params.get("x0", 0.0))
    if family in ("cosine", "two_harmonic", "shifted_cosine"):
        phase = builtin_phase_family(family, params)
        if spec.get("z2") and not phase.even:
            raise CouplingError(f"{family} with these parameters is not Z2-invariant")
        return phase.as_coupling()
    raise CouplingError(f"unknown coupling family {family!r}")


def phase_from_spec(spec: dict) -> PhaseCoupling:
    return builtin_phase_family(spec.get("family"), spec.get("params", {}))
