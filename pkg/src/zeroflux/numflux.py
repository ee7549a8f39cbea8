"""Monotone two-point convection fluxes F(a, b).

All three fluxes are consistent (F(s, s) = f(s)), nondecreasing in ``a``,
nonincreasing in ``b`` and Lipschitz.  Conservativity is structural: the
scheme evaluates one value per interface and uses it with opposite signs on
the two sides.
"""

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ParameterError
from .model import slope

KINDS = ("godunov", "engquist_osher", "rusanov")
ALIASES = {"godunov": "godunov", "eo": "engquist_osher", "engquist_osher": "engquist_osher",
           "engquist-osher": "engquist_osher", "rusanov": "rusanov"}
GRID_INTERVALS = 10_000
MAX_CRITICAL_POINTS = 256


class _RangeTable:
    """Sparse table answering max/min over index ranges of a fixed array."""

    def __init__(self, values):
        self.n = len(values)
        self.hi = [np.asarray(values, dtype=float)]
        self.lo = [np.asarray(values, dtype=float)]
        width = 1
        while 2 * width <= self.n:
            prev_hi, prev_lo = self.hi[-1], self.lo[-1]
            self.hi.append(np.maximum(prev_hi[:-width], prev_hi[width:]))
            self.lo.append(np.minimum(prev_lo[:-width], prev_lo[width:]))
            width *= 2

    def query(self, i0, i1, which):
        """Extremum over ``values[i0:i1+1]``; empty ranges give -inf / +inf."""
        i0 = np.asarray(i0)
        i1 = np.asarray(i1)
        empty = i1 < i0
        length = np.where(empty, 1, i1 - i0 + 1)
        level = np.floor(np.log2(length)).astype(int)
        a = np.where(empty, 0, i0)
        b = np.where(empty, 0, i1 - (1 << level) + 1)
        table = self.hi if which == "max" else self.lo
        out = np.empty(np.broadcast(a, b).shape)
        for lv in np.unique(level):
            sel = level == lv
            t = table[lv]
            pick = np.maximum if which == "max" else np.minimum
            out[sel] = pick(t[a[sel]], t[b[sel]])
        fill = -np.inf if which == "max" else np.inf
        return np.where(empty, fill, out)


def critical_points(f, lo, hi, intervals=GRID_INTERVALS):
    """Interior local extrema of ``f`` on [lo, hi], refined by bounded Brent."""
    s = np.linspace(lo, hi, intervals + 1)
    v = np.asarray(f(s), dtype=float) * np.ones_like(s)
    d = np.diff(v)
    nz = np.flatnonzero(d != 0.0)
    if nz.size < 2:
        return np.empty(0)
    sg = np.sign(d[nz])
    flips = np.flatnonzero(sg[:-1] != sg[1:])
    out = []
    for k in flips:
        i, j = nz[k], nz[k + 1]
        a, b = s[i], s[j + 1]
        sign = 1.0 if sg[k] < 0 else -1.0  # minimum when f was decreasing
        res = minimize_scalar(lambda x: sign * float(f(np.array([x]))[0]), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-13})
        out.append(res.x)
    return np.array(out)


class NumericalFlux:
    """A named monotone flux built on the convection function of a model.

    ``flux(a, b)`` evaluates vectorized without range checks (the nonlinear
    solver may visit states slightly outside [0, u_max]); the named methods
    check their arguments.
    """

    def __init__(self, model, kind="godunov"):
        if kind not in ALIASES:
            raise ParameterError(f"unknown flux kind {kind!r}; expected one of {sorted(ALIASES)}")
        self.kind = ALIASES[kind]
        self.model = model
        self.f = model.f
        self.u_max = float(model.u_max)
        crit = critical_points(self.f, 0.0, self.u_max)
        self.dense_fallback = crit.size > MAX_CRITICAL_POINTS
        self.crit = crit
        self.f_crit = np.asarray(self.f(crit), dtype=float) * np.ones_like(crit)

        z = np.concatenate([[0.0], crit, [self.u_max]])
        fz = np.asarray(self.f(z), dtype=float) * np.ones_like(z)
        jumps = np.diff(fz)
        self._z, self._fz = z, fz
        self._inc = (jumps >= 0.0).astype(float)
        self._cum_pos = np.concatenate([[0.0], np.cumsum(np.maximum(jumps, 0.0))])
        self._cum_neg = np.concatenate([[0.0], np.cumsum(np.minimum(jumps, 0.0))])

        self._grid = np.linspace(0.0, self.u_max, GRID_INTERVALS + 1)
        self._dgrid = self.u_max / GRID_INTERVALS
        self._abs_slope = _RangeTable(np.abs(self.df(self._grid)))
        if self.dense_fallback:
            self._fvals = _RangeTable(np.asarray(self.f(self._grid), dtype=float))
        self.lambda_max = float(np.max(np.abs(self.df(self._grid))))

    # -- helpers -----------------------------------------------------------
    def df(self, u):
        return slope(self.f, u, self.u_max)

    @property
    def lipschitz(self):
        """Lipschitz bound L_F of (a, b) -> F(a, b) used by the CFL limit."""
        if self.kind == "rusanov":
            return float(self.model.L_f + self.lambda_max)
        return float(self.model.L_f)

    def _grid_range(self, lo, hi):
        i0 = np.ceil(np.clip(lo, 0.0, self.u_max) / self._dgrid - 1e-9).astype(int)
        i1 = np.floor(np.clip(hi, 0.0, self.u_max) / self._dgrid + 1e-9).astype(int)
        i1 = np.where(hi < 0.0, -1, i1)
        i0 = np.where(lo > self.u_max, GRID_INTERVALS + 1, i0)
        return i0, np.minimum(i1, GRID_INTERVALS)

    def _check(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        tol = 1e-12 * self.u_max
        for v in (a, b):
            if np.any((v < -tol) | (v > self.u_max + tol)):
                raise DomainError(f"flux arguments must lie in [0, {self.u_max}]")
        return a, b

    # -- raw vectorized fluxes ---------------------------------------------
    def _godunov(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        fa = np.asarray(self.f(a), dtype=float)
        fb = np.asarray(self.f(b), dtype=float)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        vmin, vmax = np.minimum(fa, fb), np.maximum(fa, fb)
        if self.dense_fallback:
            i0, i1 = self._grid_range(lo, hi)
            vmin = np.minimum(vmin, self._fvals.query(i0, i1, "min"))
            vmax = np.maximum(vmax, self._fvals.query(i0, i1, "max"))
        elif self.crit.size:
            inside = (self.crit >= lo[..., None]) & (self.crit <= hi[..., None])
            vmin = np.minimum(vmin, np.where(inside, self.f_crit, np.inf).min(axis=-1))
            vmax = np.maximum(vmax, np.where(inside, self.f_crit, -np.inf).max(axis=-1))
        return np.where(a <= b, vmin, vmax)

    def _engquist_osher(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        last = len(self._z) - 2
        ja = np.clip(np.searchsorted(self._z, a, side="right") - 1, 0, last)
        jb = np.clip(np.searchsorted(self._z, b, side="right") - 1, 0, last)
        pos = self._cum_pos[ja] + self._inc[ja] * (self.f(a) - self._fz[ja])
        neg = self._cum_neg[jb] + (1.0 - self._inc[jb]) * (self.f(b) - self._fz[jb])
        return self._fz[0] + pos + neg

    def _rusanov(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lam = self.local_speed(a, b)
        return 0.5 * (self.f(a) + self.f(b)) - 0.5 * lam * (b - a)

    def local_speed(self, a, b):
        """max |f'| over [min(a, b), max(a, b)] from endpoint and grid samples."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        i0, i1 = self._grid_range(lo, hi)
        inner = self._abs_slope.query(i0, i1, "max")
        return np.maximum(np.maximum(np.abs(self.df(lo)), np.abs(self.df(hi))), inner)

    def flux(self, a, b):
        if self.kind == "godunov":
            return self._godunov(a, b)
        if self.kind == "engquist_osher":
            return self._engquist_osher(a, b)
        return self._rusanov(a, b)

    __call__ = flux

    def partials(self, a, b):
        """An element of the generalized Jacobian (dF/da, dF/db).

        Exact on smooth pieces; at kinks one of the one-sided derivatives is
        returned.  The Rusanov speed is frozen when differentiating.
        """
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        da_f, db_f = self.df(a), self.df(b)
        if self.kind == "engquist_osher":
            last = len(self._z) - 2
            ja = np.clip(np.searchsorted(self._z, a, side="right") - 1, 0, last)
            jb = np.clip(np.searchsorted(self._z, b, side="right") - 1, 0, last)
            return self._inc[ja] * da_f, (1.0 - self._inc[jb]) * db_f
        if self.kind == "rusanov":
            lam = self.local_speed(a, b)
            return 0.5 * (da_f + lam), 0.5 * (db_f - lam)
        if self.dense_fallback:
            step = 1e-7 * max(1.0, self.u_max)
            base = self._godunov(a, b)
            return (self._godunov(a + step, b) - base) / step, (self._godunov(a, b + step) - base) / step
        value = self._godunov(a, b)
        fa = np.asarray(self.f(a), dtype=float)
        fb = np.asarray(self.f(b), dtype=float)
        at_a = fa == value
        at_b = ~at_a & (fb == value)
        return np.where(at_a, da_f, 0.0), np.where(at_b, db_f, 0.0)

    # -- checked entry points ----------------------------------------------
    def godunov(self, a, b):
        """min of f over [a, b] if a <= b, max of f over [b, a] otherwise."""
        return self._godunov(*self._check(a, b))

    def engquist_osher(self, a, b):
        """f(0) + int_0^a max(f', 0) + int_0^b min(f', 0), exact on monotone pieces."""
        return self._engquist_osher(*self._check(a, b))

    def rusanov(self, a, b):
        return self._rusanov(*self._check(a, b))

    def evaluate(self, a, b):
        """The configured flux with argument range checks."""
        return self.flux(*self._check(a, b))

    def __repr__(self):
        return f"NumericalFlux({self.kind!r}, model={self.model.name!r})"


def make_flux(model, kind="godunov"):
    return NumericalFlux(model, kind)
