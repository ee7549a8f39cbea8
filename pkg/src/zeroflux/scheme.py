"""Fully discrete finite volume scheme with zero-flux boundaries.

For each cell K and inner interface sigma = K|L the balance reads

    m(K) (u_K^{n+1} - u_K^n) / dt
        + sum_sigma [ F_{K,sigma}(u_K, u_L) - tau_sigma (phi(u_L) - phi(u_K)) ] = 0

with fluxes taken at the new level (implicit) or the old level (explicit).
Boundary faces contribute nothing, which is the zero-flux condition.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import ConvergenceError, InvalidDataError, ParameterError
from .model import slope
from .numflux import NumericalFlux

log = logging.getLogger(__name__)

QUAD_POINTS = 32
STRATEGIES = ("newton_semismooth", "picard")


@dataclass(frozen=True)
class SolverConfig:
    nonlinear_tol: float = 1e-10
    max_iters: int = 200
    strategy: str = "newton_semismooth"
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not self.nonlinear_tol > 0:
            raise ParameterError("nonlinear_tol must be positive")
        if not 0.0 < self.cfl_safety < 1.0:
            raise ParameterError("cfl_safety must lie in (0, 1)")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ParameterError("max_iters must be a positive integer")
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"strategy must be one of {STRATEGIES}")

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class DiscreteSolution:
    """Trajectory ``steps[n] = u^n`` on a fixed mesh with constant ``dt``.

    The associated space-time function is piecewise constant: ``u^{n+1}`` on
    ``K x (n dt, (n+1) dt]``.
    """

    mesh: object
    dt: float
    steps: np.ndarray
    model: object
    flux: object
    mode: str = "implicit"
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    @property
    def flux_kind(self):
        return self.flux.kind

    @property
    def n_steps(self):
        return self.steps.shape[0] - 1

    @property
    def times(self):
        return self.dt * np.arange(self.steps.shape[0])

    @property
    def T(self):
        return self.dt * self.n_steps

    def mass(self):
        return self.steps @ self.mesh.volumes


def as_flux(flux, model):
    if isinstance(flux, NumericalFlux):
        return flux
    return NumericalFlux(model, flux or "godunov")


class FluxBalance:
    """Assembled interface data for one (model, mesh, flux) triple.

    Interface ``i`` joins ``K = cells[i, 0]`` to ``L = cells[i, 1]``.  Its
    convective flux is ``m(sigma) c F(u_K, u_L)`` with ``c`` the component of
    the transport direction along the K->L normal; for ``c < 0`` the
    arguments are swapped so the flux stays monotone in the upwind sense.
    """

    def __init__(self, model, mesh, flux):
        self.model = model
        self.mesh = mesh
        self.flux = as_flux(flux, model)
        self.K = mesh.iface_cells[:, 0]
        self.L = mesh.iface_cells[:, 1]
        self.tau = mesh.transmissivity
        if mesh.dim == 1:
            self.c = mesh.iface_normal[:, 0].copy()
            self.c_bnd = mesh.bface_normal[:, 0].copy()
        else:
            e = np.asarray(model.direction[: mesh.dim], dtype=float)
            self.c = mesh.iface_normal @ e
            self.c_bnd = mesh.bface_normal @ e
        self.weight = mesh.iface_measure * self.c
        self.forward = self.c >= 0.0
        self.n = mesh.n_cells

    def _ordered(self, uK, uL):
        return np.where(self.forward, uK, uL), np.where(self.forward, uL, uK)

    def convective(self, u):
        """Convective flux through each interface, oriented K -> L."""
        a, b = self._ordered(u[self.K], u[self.L])
        return self.weight * self.flux(a, b)

    def diffusive(self, u):
        """tau (phi(u_L) - phi(u_K)) per interface."""
        p = self.model.phi(u)
        return self.tau * (p[self.L] - p[self.K])

    def interface_totals(self, u):
        return self.convective(u) - self.diffusive(u)

    def divergence(self, u):
        """sum over eps_K of the outgoing total flux, per cell."""
        g = self.interface_totals(u)
        return np.bincount(self.K, g, self.n) - np.bincount(self.L, g, self.n)

    def residual(self, u, u_prev, dt):
        return self.mesh.volumes * (u - u_prev) / dt + self.divergence(u)

    def jacobian(self, u, dt):
        uK, uL = u[self.K], u[self.L]
        a, b = self._ordered(uK, uL)
        da, db = self.flux.partials(a, b)
        dK = self.weight * np.where(self.forward, da, db)
        dL = self.weight * np.where(self.forward, db, da)
        dphi = phi_slope(self.model, u)
        gK = dK + self.tau * dphi[self.K]
        gL = dL - self.tau * dphi[self.L]
        rows = np.concatenate([self.K, self.K, self.L, self.L, np.arange(self.n)])
        cols = np.concatenate([self.K, self.L, self.K, self.L, np.arange(self.n)])
        vals = np.concatenate([gK, gL, -gK, -gL, self.mesh.volumes / dt])
        return sp.csc_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def stabilizer(self, dt):
        """Graph Laplacian weighted by Lipschitz bounds, plus m(K)/dt.

        Used by the L-scheme (stabilized Picard) iteration; its zero column
        sums keep the total mass of every iterate unchanged.
        """
        w = np.abs(self.weight) * self.flux.lipschitz + self.tau * self.model.L_phi
        w = np.maximum(w, 1e-300)
        rows = np.concatenate([self.K, self.K, self.L, self.L, np.arange(self.n)])
        cols = np.concatenate([self.K, self.L, self.K, self.L, np.arange(self.n)])
        vals = np.concatenate([w, -w, -w, w, self.mesh.volumes / dt])
        return sp.csc_matrix((vals, (rows, cols)), shape=(self.n, self.n))


def phi_slope(model, u):
    """phi'(u), taking the right derivative at the kink u_c."""
    return slope(model.phi, u, model.u_max)


def cell_averages(fn, mesh, points=QUAD_POINTS):
    """Averages of a space function over each cell, composite midpoint rule.

    ``points`` subsamples per cell in 1D, ``points**2`` on rectangles.
    """
    frac = (np.arange(points) + 0.5) / points
    if mesh.layout["kind"] == "interval":
        nodes = mesh.layout["nodes"]
        xs = nodes[:-1, None] + np.diff(nodes)[:, None] * frac[None, :]
        pts = xs.reshape(-1, 1)
    else:
        lx, ly, nx, ny = (mesh.layout[k] for k in ("lx", "ly", "nx", "ny"))
        dx, dy = lx / nx, ly / ny
        ox = mesh.centers[:, 0] - 0.5 * dx
        oy = mesh.centers[:, 1] - 0.5 * dy
        px = np.broadcast_to(ox[:, None, None] + dx * frac[None, :, None], (mesh.n_cells, points, points))
        py = np.broadcast_to(oy[:, None, None] + dy * frac[None, None, :], (mesh.n_cells, points, points))
        pts = np.stack([px.ravel(), py.ravel()], axis=1)
    try:
        vals = np.asarray(fn(pts), dtype=float) * np.ones(pts.shape[0])
    except Exception as exc:
        raise InvalidDataError(f"cannot evaluate data: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise InvalidDataError("data produced non-finite values")
    avg = vals.reshape(-1, pts.shape[0] // (mesh.n_cells)).mean(axis=1)
    if mesh.layout["kind"] == "interval":
        # quadrature ran in left-to-right order; map to storage order
        out = np.empty_like(avg)
        out[mesh.cell_ids] = avg
        avg = out
    return avg


def init_cell_averages(model, mesh, points=QUAD_POINTS):
    """u_K^0 = average of u0 over K.

    Values that overshoot [0, u_max] by less than 1e-12 (quadrature round-off)
    are clamped; anything larger is a data error.
    """
    avg = cell_averages(model.u0, mesh, points)
    over = np.maximum(-avg, avg - model.u_max)
    if np.any(over >= 1e-12):
        raise InvalidDataError("u0 averages leave [0, u_max]")
    return np.clip(avg, 0.0, model.u_max)


def _converged_floor(mesh, u_prev, dt, tol):
    scale = float(np.max(np.abs(mesh.volumes * u_prev / dt), initial=0.0))
    return max(tol, 64.0 * np.finfo(float).eps * max(scale, 1.0))


def solve_balance(system, u_prev, dt, cfg):
    """Solve the implicit balance for u^{n+1}; returns ``(u, iterations, residual)``.

    Semismooth Newton with exact generalized Jacobians and backtracking;
    when the line search stalls, one stabilized Picard step is taken instead.
    Every update direction has zero mass, so the iterate keeps the mass of
    ``u_prev`` exactly (up to round-off) whatever the residual.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    u = u_prev.copy()
    R = system.residual(u, u_prev, dt)
    floor = _converged_floor(system.mesh, u_prev, dt, cfg.nonlinear_tol)
    stab = None
    for it in range(cfg.max_iters + 1):
        rnorm = float(np.max(np.abs(R), initial=0.0))
        if rnorm <= floor:
            return u, it, rnorm
        if it == cfg.max_iters:
            break
        accepted = False
        if cfg.strategy == "newton_semismooth":
            delta = spsolve(system.jacobian(u, dt), -R)
            if np.all(np.isfinite(delta)):
                r2 = float(R @ R)
                alpha = 1.0
                while alpha >= 1.0 / 64.0:
                    trial = u + alpha * delta
                    Rt = system.residual(trial, u_prev, dt)
                    if float(Rt @ Rt) < (1.0 - 1e-4 * alpha) * r2:
                        u, R, accepted = trial, Rt, True
                        break
                    alpha *= 0.5
        if not accepted:
            if stab is None:
                stab = system.stabilizer(dt)
            u = u + spsolve(stab, -R)
            R = system.residual(u, u_prev, dt)
    raise ConvergenceError("nonlinear solver stagnated", rnorm, cfg.max_iters)


def implicit_step(u_prev, dt, model, mesh, flux="godunov", cfg=None):
    """One step of the implicit scheme; the result solves the balance to ``cfg.nonlinear_tol``."""
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    cfg = cfg or SolverConfig()
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape != (mesh.n_cells,):
        raise InvalidDataError("u_prev must hold one value per cell")
    u, _, _ = solve_balance(FluxBalance(model, mesh, flux), u_prev, dt, cfg)
    return u


def cfl_limit(model, mesh, cfg=None, flux="godunov"):
    """zeta * min_K m(K) / sum_{sigma in eps_K} (2 L_F m(sigma) + 2 L_phi tau_sigma)."""
    cfg = cfg or SolverConfig()
    flux = as_flux(flux, model)
    per_iface = 2.0 * flux.lipschitz * mesh.iface_measure + 2.0 * model.L_phi * mesh.transmissivity
    K, L = mesh.iface_cells[:, 0], mesh.iface_cells[:, 1]
    denom = np.bincount(K, per_iface, mesh.n_cells) + np.bincount(L, per_iface, mesh.n_cells)
    with np.errstate(divide="ignore"):
        ratio = np.where(denom > 0.0, mesh.volumes / denom, np.inf)
    return float(cfg.cfl_safety * ratio.min())


def explicit_step(u_prev, dt, model, mesh, flux="godunov", cfg=None, _limit=None):
    """Forward-Euler analogue; refuses steps above the CFL limit."""
    cfg = cfg or SolverConfig()
    flux = as_flux(flux, model)
    limit = cfl_limit(model, mesh, cfg, flux) if _limit is None else _limit
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if dt > limit * (1.0 + 1e-12):
        raise ParameterError(f"dt = {dt:.6g} exceeds the CFL limit {limit:.6g}")
    u_prev = np.asarray(u_prev, dtype=float)
    system = FluxBalance(model, mesh, flux)
    return u_prev - dt * system.divergence(u_prev) / mesh.volumes


@dataclass
class DiamondGradient:
    """Discrete gradient of a cell field, constant on each interface diamond.

    ``difference`` is (phi_L - phi_K) / d_KL along the K->L normal and
    ``vectors`` the gradient field itself, ``dim * difference * normal``; the
    factor ``dim`` makes the integral over a diamond (measure m(sigma) d / dim)
    equal m(sigma) (phi_L - phi_K) normal, which is what weak consistency
    needs.  Boundary faces carry no diamond.
    """

    difference: np.ndarray
    vectors: np.ndarray
    measure: np.ndarray


def discrete_gradient(phi_values, mesh):
    phi_values = np.asarray(phi_values, dtype=float)
    if phi_values.shape[-1] != mesh.n_cells:
        raise InvalidDataError("need one value per cell")
    K, L = mesh.iface_cells[:, 0], mesh.iface_cells[:, 1]
    diff = (phi_values[..., L] - phi_values[..., K]) / mesh.iface_dist
    vec = mesh.dim * diff[..., None] * mesh.iface_normal
    meas = mesh.iface_measure * mesh.iface_dist / mesh.dim
    return DiamondGradient(difference=diff, vectors=vec, measure=meas)


def step_count(T, dt):
    if T <= 0:
        return 0
    return int(math.ceil(T / dt * (1.0 - 1e-12)))


def run_evolution(model, mesh, dt, flux="godunov", cfg=None, mode="implicit", u0=None,
                  T=None):
    """March from u^0 until N dt >= T, recording solver statistics."""
    cfg = cfg or SolverConfig()
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if mode not in ("implicit", "explicit"):
        raise ParameterError(f"mode must be 'implicit' or 'explicit', got {mode!r}")
    flux = as_flux(flux, model)
    T = model.T if T is None else T
    system = FluxBalance(model, mesh, flux)
    limit = None
    if mode == "explicit":
        limit = cfl_limit(model, mesh, cfg, flux)
        if dt > limit * (1.0 + 1e-12):
            raise ParameterError(f"dt = {dt:.6g} exceeds the CFL limit {limit:.6g}")
    u = init_cell_averages(model, mesh) if u0 is None else np.asarray(u0, dtype=float).copy()
    if u.shape != (mesh.n_cells,):
        raise InvalidDataError("initial vector must hold one value per cell")
    n_steps = step_count(T, dt)
    steps = np.empty((n_steps + 1, mesh.n_cells))
    steps[0] = u
    iterations, residuals = [], []
    mass0 = float(mesh.volumes @ u)
    for n in range(n_steps):
        if mode == "implicit":
            try:
                u, its, res = solve_balance(system, u, dt, cfg)
            except ConvergenceError as exc:
                raise exc.at_step(n + 1) from None
            iterations.append(its)
            residuals.append(res)
        else:
            u = u - dt * system.divergence(u) / mesh.volumes
            iterations.append(0)
            residuals.append(0.0)
        steps[n + 1] = u
        if log.isEnabledFor(logging.DEBUG):
            log.debug("step %d: mass drift %.3e, range [%.6g, %.6g], iterations %d",
                      n + 1, float(mesh.volumes @ u) - mass0, u.min(), u.max(), iterations[-1])
    return DiscreteSolution(mesh=mesh, dt=float(dt), steps=steps, model=model, flux=flux,
                            mode=mode, iterations=iterations, residuals=residuals)


def step_index(solution, t):
    """Index n of the stored vector representing time ``t`` (right-closed steps)."""
    if t < -1e-12 * max(solution.dt, 1.0) or t > solution.T * (1.0 + 1e-12) + 1e-15:
        raise ParameterError(f"t = {t} outside [0, {solution.T}]")
    if t <= 0.0:
        return 0
    return min(int(math.ceil(t / solution.dt * (1.0 - 1e-12))), solution.n_steps)


def reconstruct(solution, t, x):
    """Value of the piecewise-constant approximation at time ``t`` and point ``x``."""
    n = step_index(solution, t)
    point = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    cell = solution.mesh.locate(point)[0]
    return float(solution.steps[n, cell])
