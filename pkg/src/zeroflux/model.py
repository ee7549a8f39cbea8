"""Problem data for the evolution problem and its stationary counterpart.

A :class:`Model` bundles the convection flux ``f``, the diffusion function
``phi`` (zero on [0, u_c], increasing above), the bounds, the initial datum
``u0``, the stationary source ``g`` and the horizon ``T``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidDataError, InvalidModelError
from .expr import SpaceFunction, StateFunction

LIPSCHITZ_SAMPLES = 10_000
H1_TOL = 1e-14


def _source(fn):
    return getattr(fn, "source", None)


def slope(fn, u, u_max=1.0):
    """Derivative of a state function; right derivative at kinks.

    Uses the exact forward-mode derivative of expression-backed functions and a
    right difference quotient for arbitrary callables.
    """
    u = np.asarray(u, dtype=float)
    deriv = getattr(fn, "derivative", None)
    if deriv is not None:
        return np.asarray(deriv(u), dtype=float) * np.ones_like(u)
    step = 1e-7 * max(1.0, u_max)
    return (np.asarray(fn(u + step), dtype=float) - np.asarray(fn(u), dtype=float)) / step


def estimate_lipschitz(fn, lo, hi, samples=LIPSCHITZ_SAMPLES):
    """Lipschitz bound of ``fn`` on [lo, hi] from a dense grid.

    Takes the largest of the grid secant slopes and one-sided difference
    quotients at the grid points, padded by a relative 1e-6.
    """
    s = np.linspace(lo, hi, samples + 1)
    v = np.asarray(fn(s), dtype=float) * np.ones_like(s)
    slopes = np.abs(np.diff(v)) / np.diff(s)
    eps = 1e-7 * max(1.0, abs(hi - lo))
    fwd = np.abs(np.asarray(fn(s[:-1] + eps), dtype=float) - v[:-1]) / eps
    bwd = np.abs(v[1:] - np.asarray(fn(s[1:] - eps), dtype=float)) / eps
    bound = max(slopes.max(initial=0.0), fwd.max(initial=0.0), bwd.max(initial=0.0))
    return float(bound * (1.0 + 1e-6))


@dataclass(frozen=True)
class Model:
    f: object
    phi: object
    u_c: float = 0.0
    u_max: float = 1.0
    u0: object = None
    g: object = None
    T: float = 1.0
    domain: tuple = ((0.0, 1.0),)
    # unit vector carrying the scalar flux in 2D; ignored in 1D
    direction: tuple = (1.0, 0.0)
    L_f: float = None
    L_phi: float = None
    name: str = "custom"

    def __post_init__(self):
        for attr in ("f", "phi"):
            v = getattr(self, attr)
            if isinstance(v, str):
                object.__setattr__(self, attr, StateFunction(v))
        for attr in ("u0", "g"):
            v = getattr(self, attr)
            if v is None:
                v = "0"
            if isinstance(v, (str, int, float)):
                object.__setattr__(self, attr, SpaceFunction(str(v)))
        if not self.u_max > 0:
            raise InvalidModelError(f"u_max must be positive, got {self.u_max}")
        if not 0.0 <= self.u_c <= self.u_max:
            raise InvalidModelError(f"u_c must lie in [0, u_max], got {self.u_c}")
        if not self.T >= 0:
            raise InvalidModelError(f"T must be nonnegative, got {self.T}")
        object.__setattr__(self, "domain", tuple(tuple(map(float, d)) for d in self.domain))
        object.__setattr__(self, "direction", tuple(map(float, self.direction)))
        if self.L_f is None:
            object.__setattr__(self, "L_f", estimate_lipschitz(self.f, 0.0, self.u_max))
        if self.L_phi is None:
            object.__setattr__(self, "L_phi", estimate_lipschitz(self.phi, 0.0, self.u_max))

    @property
    def h1_satisfied(self):
        ends = np.asarray(self.f(np.array([0.0, self.u_max])), dtype=float)
        return bool(np.all(np.abs(ends) <= H1_TOL))

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        """Resolved description for run manifests."""
        return {
            "name": self.name,
            "f": _source(self.f),
            "phi": _source(self.phi),
            "u0": _source(self.u0),
            "g": _source(self.g),
            "u_c": self.u_c,
            "u_max": self.u_max,
            "T": self.T,
            "domain": [list(d) for d in self.domain],
            "direction": list(self.direction),
            "L_f": self.L_f,
            "L_phi": self.L_phi,
            "h1_satisfied": self.h1_satisfied,
        }


@dataclass
class ValidationReport:
    phi_monotone: bool
    phi_flat_below_uc: bool
    phi_increasing_above_uc: bool
    u0_min: float
    u0_max: float
    h1_satisfied: bool
    lipschitz_ok: bool
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)


def _domain_samples(domain, per_axis):
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in domain]
    if len(axes) == 1:
        return axes[0][:, None]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def validate(model, samples=1001, rng=None):
    """Check the structural hypotheses on a model and report them.

    A decreasing ``phi`` raises :class:`InvalidModelError` and ``u0`` leaving
    [0, u_max] raises :class:`InvalidDataError`.  Failure of
    f(0) = f(u_max) = 0 is only flagged: such runs are legitimate, they just
    lose the invariant region.
    """
    s = np.linspace(0.0, model.u_max, samples)
    phi = np.asarray(model.phi(s), dtype=float) * np.ones_like(s)
    if not np.all(np.isfinite(phi)):
        raise InvalidModelError("phi is not finite on [0, u_max]")
    drops = np.diff(phi)
    if np.any(drops < -1e-14):
        at = s[np.argmin(drops)]
        raise InvalidModelError(f"phi decreases near u = {at:.6g}")
    below = s <= model.u_c
    flat = bool(np.all(np.abs(phi[below]) <= 1e-14))
    above = s >= model.u_c
    increasing = bool(np.all(np.diff(phi[above]) > 0.0)) if above.sum() > 1 else True

    pts = _domain_samples(model.domain, 401 if len(model.domain) == 1 else 101)
    try:
        u0 = np.asarray(model.u0(pts), dtype=float) * np.ones(pts.shape[0])
    except Exception as exc:  # user data; report as a data error
        raise InvalidDataError(f"u0 cannot be evaluated: {exc}") from exc
    if not np.all(np.isfinite(u0)):
        raise InvalidDataError("u0 is not finite")
    lo, hi = float(u0.min()), float(u0.max())
    if lo < -1e-12 or hi > model.u_max + 1e-12:
        raise InvalidDataError(f"u0 takes values in [{lo:.6g}, {hi:.6g}] outside [0, {model.u_max}]")

    rng = np.random.default_rng(0) if rng is None else rng
    a, b = rng.uniform(0.0, model.u_max, (2, LIPSCHITZ_SAMPLES))
    gap = np.abs(a - b)
    lip_ok = bool(np.all(np.abs(model.f(a) - model.f(b)) <= model.L_f * gap + 1e-15)
                  and np.all(np.abs(model.phi(a) - model.phi(b)) <= model.L_phi * gap + 1e-15))

    warnings = []
    if not flat:
        warnings.append("phi is not identically zero on [0, u_c]")
    if not increasing:
        warnings.append("phi is not strictly increasing on [u_c, u_max]")
    if not model.h1_satisfied:
        warnings.append("f(0) = f(u_max) = 0 fails: no invariant region, boundary layers expected")
    if not lip_ok:
        warnings.append("declared Lipschitz constants are violated on sampled pairs")
    return ValidationReport(
        phi_monotone=True,
        phi_flat_below_uc=flat,
        phi_increasing_above_uc=increasing,
        u0_min=lo,
        u0_max=hi,
        h1_satisfied=model.h1_satisfied,
        lipschitz_ok=lip_ok,
        warnings=warnings,
    )


FIG1_U0 = "0.8*ind(x, 0.3, 0.6)"


def builtin_models():
    """Named catalog: the three fig1 cases, a pure-diffusion case and two single-regime limits."""
    base = dict(u_max=1.0, u0=FIG1_U0, g="0", T=0.5, domain=((0.0, 1.0),))
    return {
        "fig1a": Model(f="u*(1-u)", phi="0", u_c=1.0, L_f=1.0, L_phi=0.0, name="fig1a", **base),
        "fig1b": Model(f="u^2/2", phi="0", u_c=1.0, L_f=1.0, L_phi=0.0, name="fig1b", **base),
        "fig1c": Model(f="u*(1-u)", phi="pos(u-0.6)", u_c=0.6, L_f=1.0, L_phi=1.0,
                       name="fig1c", **base),
        "heat-like": Model(f="0", phi="u", u_c=0.0, L_f=0.0, L_phi=1.0, name="heat-like",
                           u_max=1.0, u0="0.5+0.4*cos(pi*x)", g="0", T=0.1),
        "hyperbolic": Model(f="u*(1-u)", phi="0", u_c=1.0, L_f=1.0, L_phi=0.0,
                            name="hyperbolic", **base),
        "parabolic": Model(f="u*(1-u)", phi="u", u_c=0.0, L_f=1.0, L_phi=1.0,
                           name="parabolic", **base),
    }


def builtin_model(name):
    catalog = builtin_models()
    if name not in catalog:
        raise InvalidModelError(f"unknown builtin model {name!r}; known: {sorted(catalog)}")
    return catalog[name]


def heat_series_solution(u0, t, x, length=1.0, terms=50, quad_points=4000):
    """Neumann heat solution on (0, length) by a cosine series.

    Coefficients of ``u0`` come from composite midpoint quadrature.  Used as an
    independent oracle for the pure-diffusion limit.
    """
    xs = (np.arange(quad_points) + 0.5) * (length / quad_points)
    v = np.asarray(u0(xs), dtype=float) * np.ones_like(xs)
    k = np.arange(terms)
    basis = np.cos(np.outer(k, xs) * math.pi / length)
    coef = basis @ v * (length / quad_points) * (2.0 / length)
    coef[0] *= 0.5
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    decay = np.exp(-np.multiply.outer(t, (k * math.pi / length) ** 2))
    modes = np.cos(np.multiply.outer(x, k) * math.pi / length)
    return np.sum(decay * coef * modes, axis=-1)
