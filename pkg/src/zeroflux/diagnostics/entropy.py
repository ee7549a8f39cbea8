"""Entropy residuals of a completed trajectory.

Two evaluations of the Kruzhkov-type residual are provided for a constant
``k`` and a test function ``xi``.

``entropy_residual`` integrates the piecewise-constant space-time field
against ``xi``::

    R(k, xi) = int_Q |u - k| xi_t + sign(u - k) [f(u) - f(k) - grad_h phi(u)] . grad xi
             + int_0^T int_dOmega |f(k) . eta| xi + int_Omega |u^0 - k| xi(0, .)

with sign(0) = 0.  Cell and face integrals of ``xi`` are exact (the bumps are
polynomial); the diamond halves of the gradient term use exact segment
integrals in 1D and the centroid rule on rectangles.  Consistency errors of
the scheme make R(k, xi) slightly negative on coarse meshes; the amount must
shrink under refinement.

``discrete_entropy_residual`` is the same pairing written with the scheme's
own entropy fluxes and point values xi_K^n = xi(n dt, x_K)::

    R_h = sum_K m |u_K^0 - k| xi_K^0 + sum_n sum_K m |u_K^{n+1} - k| (xi_K^{n+1} - xi_K^n)
        + dt sum_n sum_sigma Gamma_sigma (xi_L^n - xi_K^n) + dt sum_n sum_K B_K xi_K^n

where Gamma is the numerical entropy flux and B_K the boundary entropy
production.  Summation by parts turns the cell entropy inequalities of a
monotone scheme into R_h >= 0, so R_h is nonnegative up to the nonlinear
solver tolerance and vanishes at k = 0 and k = u_max when f(0) = f(u_max) = 0.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ParameterError
from ..model import slope
from ..scheme import FluxBalance, discrete_gradient
from .testfunctions import bump_family

K_GRID = 21
XI_FAMILY = 48


def _check_k(solution, k):
    u_max = solution.model.u_max
    if not (-1e-14 <= k <= u_max * (1 + 1e-14)):
        raise DomainError(f"k = {k} outside [0, {u_max}]")
    return float(min(max(k, 0.0), u_max))


class _Geometry:
    """Per-solution data shared by every (k, xi) evaluation."""

    def __init__(self, solution):
        self.solution = solution
        self.mesh = mesh = solution.mesh
        self.model = solution.model
        self.system = FluxBalance(solution.model, mesh, solution.flux)
        self.N = solution.n_steps
        self.dt = solution.dt
        self.t = solution.times
        self.U = solution.steps
        self.V = self.U[1:]
        self.boxes = mesh.cell_boxes()
        self.half_meas, self.half_cent = mesh.diamond_halves()
        self.bdir = np.abs(self.system.c_bnd) * mesh.bface_measure
        # fields at which the entropy fluxes of step n -> n+1 are evaluated
        self.flux_states = self.V if solution.mode == "implicit" else self.U[:-1]
        self.phi_V = np.asarray(self.model.phi(self.V), dtype=float) * np.ones_like(self.V)
        self.grad = discrete_gradient(self.phi_V, mesh)
        self.f_V = np.asarray(self.model.f(self.V), dtype=float) * np.ones_like(self.V)
        if mesh.dim == 1:
            self.e = np.ones(1)
        else:
            self.e = np.asarray(self.model.direction[: mesh.dim], dtype=float)
        self._xi_cache = {}

    def xi_data(self, xi):
        key = id(xi)
        if key in self._xi_cache:
            return self._xi_cache[key][1]
        mesh = self.mesh
        I, G = xi.box_integrals(self.boxes)
        theta_int = xi.theta_integral(self.t[:-1], self.t[1:])
        theta_pt = xi.theta(self.t)
        K, L = self.system.K, self.system.L
        normal = mesh.iface_normal
        if mesh.dim == 1:
            p_iface = xi.psi(mesh.iface_center)
            p_cell = xi.psi(mesh.centers)
            # integral over D cap K of grad psi . n, exact on segments
            halfK = p_iface - p_cell[K]
            halfL = p_cell[L] - p_iface
        else:
            gK = xi.grad_psi(self.half_cent[:, 0, :])
            gL = xi.grad_psi(self.half_cent[:, 1, :])
            halfK = self.half_meas[:, 0] * np.sum(gK * normal, axis=1)
            halfL = self.half_meas[:, 1] * np.sum(gL * normal, axis=1)
        psi_c = xi.psi(mesh.centers)
        data = dict(
            I=I,
            G_e=G @ self.e,
            theta_int=theta_int,
            dtheta_int=np.diff(theta_pt),
            theta0=float(theta_pt[0]),
            halfK=mesh.dim * halfK,
            halfL=mesh.dim * halfL,
            face=xi.face_integrals(mesh.bface_center, mesh.bface_normal, mesh.bface_measure),
            psi_c=psi_c,
            theta_pt=theta_pt,
            dpsi=psi_c[L] - psi_c[K],
        )
        # keep xi alive so its id stays unique while cached
        self._xi_cache[key] = (xi, data)
        return data


def _continuous(geo, k, xi):
    d = geo.xi_data(xi)
    model = geo.model
    fk = float(model.f(np.array([k]))[0])
    A = np.abs(geo.V - k)                          # (N, n)
    S = np.sign(geo.V - k)
    time_term = float(np.sum(d["dtheta_int"] * (A @ d["I"])))
    conv_term = float(np.sum(d["theta_int"] * ((S * (geo.f_V - fk)) @ d["G_e"])))
    K, L = geo.system.K, geo.system.L
    diff = geo.grad.difference                     # (N, ni)
    diff_term = -float(np.sum(d["theta_int"] * ((diff * S[:, K]) @ d["halfK"] + (diff * S[:, L]) @ d["halfL"])))
    bnd_term = abs(fk) * float(np.sum(d["theta_int"])) * float(geo.bdir @ d["face"])
    init_term = d["theta0"] * float(np.abs(geo.U[0] - k) @ d["I"])
    return time_term + conv_term + diff_term + bnd_term + init_term


def entropy_fluxes(solution, k, states=None, system=None):
    """Numerical entropy flux Gamma per interface (oriented K -> L) for each row of ``states``."""
    system = system or FluxBalance(solution.model, solution.mesh, solution.flux)
    model = solution.model
    if states is None:
        states = solution.steps[1:] if solution.mode == "implicit" else solution.steps[:-1]
    hi = np.maximum(states, k)
    lo = np.minimum(states, k)
    K, L = system.K, system.L

    def directed(v):
        a, b = system._ordered(v[..., K], v[..., L])
        return system.weight * system.flux(a, b)

    G = directed(hi) - directed(lo)
    pk = float(model.phi(np.array([k]))[0])
    P = np.abs(np.asarray(model.phi(states), dtype=float) * np.ones_like(states) - pk)
    return G - system.tau * (P[..., L] - P[..., K])


def _boundary_production(geo, k):
    """B_K = sum over boundary faces of K of |f(k) c| m(face)."""
    fk = float(geo.model.f(np.array([k]))[0])
    return np.bincount(geo.mesh.bface_cell, abs(fk) * geo.bdir, geo.mesh.n_cells)


def _discrete(geo, k, xi, gamma=None):
    d = geo.xi_data(xi)
    m = geo.mesh.volumes
    if gamma is None:
        gamma = entropy_fluxes(geo.solution, k, geo.flux_states, geo.system)
    E = np.abs(geo.U - k) * m                      # (N+1, n)
    psi = d["psi_c"]
    th = d["theta_pt"]
    init_term = th[0] * float(E[0] @ psi)
    time_term = float(np.sum(np.diff(th) * (E[1:] @ psi)))
    flux_term = geo.dt * float(np.sum(th[:-1] * (gamma @ d["dpsi"])))
    bnd_term = geo.dt * float(np.sum(th[:-1])) * float(_boundary_production(geo, k) @ psi)
    return init_term + time_term + flux_term + bnd_term


def entropy_residual(solution, k, xi):
    """Space-time entropy residual R(k, xi) of the piecewise-constant field."""
    k = _check_k(solution, k)
    if solution.n_steps == 0:
        return 0.0
    return _continuous(_Geometry(solution), k, xi)


def discrete_entropy_residual(solution, k, xi):
    """Scheme-consistent entropy residual R_h(k, xi); nonnegative up to solver tolerance."""
    k = _check_k(solution, k)
    if solution.n_steps == 0:
        return 0.0
    return _discrete(_Geometry(solution), k, xi)


def cell_entropy_defects(solution, k):
    """Defect of the cell entropy inequality per step and cell, shape ``(N, n)``.

    m(K)(|u_K^{n+1} - k| - |u_K^n - k|) / dt + sum of outgoing Gamma - |beta_K|,
    where beta_K = f(k) sum of m(face) c over the boundary faces of K is what a
    constant state k leaves unbalanced.  Positive entries beyond round-off
    locate a violated inequality.
    """
    k = _check_k(solution, k)
    geo = _Geometry(solution)
    if geo.N == 0:
        return np.zeros((0, geo.mesh.n_cells))
    gamma = entropy_fluxes(solution, k, geo.flux_states, geo.system)
    n = geo.mesh.n_cells
    K, L = geo.system.K, geo.system.L
    out = np.zeros((geo.N, n))
    np.add.at(out, (slice(None), K), gamma)
    np.add.at(out, (slice(None), L), -gamma)
    E = np.abs(geo.U - k)
    fk = float(geo.model.f(np.array([k]))[0])
    beta = fk * np.bincount(geo.mesh.bface_cell, geo.system.c_bnd * geo.mesh.bface_measure, n)
    return geo.mesh.volumes * np.diff(E, axis=0) / geo.dt + out - np.abs(beta)


def k_grid_values(model, count=K_GRID):
    """Uniform grid on [0, u_max] plus u_c and detected kinks of phi."""
    if count < 2:
        raise ParameterError("k_grid must be at least 2")
    ks = list(np.linspace(0.0, model.u_max, int(count)))
    ks.append(model.u_c)
    s = np.linspace(0.0, model.u_max, 2001)
    sl = slope(model.phi, s, model.u_max)
    jumps = np.abs(np.diff(sl))
    if jumps.size:
        thresh = max(1e-6 * max(model.L_phi, 1.0), 50.0 * float(np.median(jumps)))
        idx = np.flatnonzero(jumps > thresh)[:16]
        ks.extend(float(s[i + 1]) for i in idx)
    return sorted(set(float(np.clip(v, 0.0, model.u_max)) for v in ks))


@dataclass
class EntropyEntry:
    k: float
    xi: str
    residual: float
    discrete: float


@dataclass
class EntropyReport:
    """Residuals over a (k, xi) sweep.

    ``min_residual`` is the most negative space-time residual, ``min_discrete``
    the most negative scheme-consistent one and ``nu`` the largest gap
    between the two.  Since the discrete residuals are nonnegative up to the
    solver tolerance, ``min_residual >= -nu`` up to that tolerance, and ``nu``
    measures the consistency error that refinement must drive to zero.
    """

    entries: list
    min_residual: float
    min_discrete: float
    nu: float
    mesh_h: float
    dt: float
    saturation: dict = field(default_factory=dict)

    def rows(self):
        return [(e.k, e.xi, e.residual, e.discrete) for e in self.entries]

    def to_dict(self):
        return {
            "min_residual": self.min_residual,
            "min_discrete": self.min_discrete,
            "nu": self.nu,
            "mesh_h": self.mesh_h,
            "dt": self.dt,
            "saturation": {repr(k): v for k, v in self.saturation.items()},
            "entries": len(self.entries),
        }


def entropy_sweep(solution, k_grid=K_GRID, xi_family=XI_FAMILY, ks=None, family=None):
    """Evaluate both residuals on a k-grid and the structured bump family.

    ``saturation`` maps k = 0 and k = u_max to the largest |R_h| over the
    family; both vanish up to solver tolerance for a run with
    f(0) = f(u_max) = 0.
    """
    if k_grid < 2:
        raise ParameterError("k_grid must be at least 2")
    geo = _Geometry(solution)
    model = solution.model
    ks = k_grid_values(model, k_grid) if ks is None else [_check_k(solution, k) for k in ks]
    entries = []
    if geo.N > 0:
        family = family if family is not None else bump_family(solution.mesh.bounds, solution.T, xi_family)
        for k in ks:
            gamma = entropy_fluxes(solution, k, geo.flux_states, geo.system)
            for xi in family:
                entries.append(EntropyEntry(k, xi.label, _continuous(geo, k, xi), _discrete(geo, k, xi, gamma)))
    cont = [e.residual for e in entries] or [0.0]
    disc = [e.discrete for e in entries] or [0.0]
    gaps = [abs(e.residual - e.discrete) for e in entries] or [0.0]
    saturation = {}
    for k in (0.0, model.u_max):
        vals = [abs(e.discrete) for e in entries if e.k == k]
        if vals:
            saturation[k] = max(vals)
    return EntropyReport(
        entries=entries,
        min_residual=float(min(cont)),
        min_discrete=float(min(disc)),
        nu=float(max(gaps)),
        mesh_h=solution.mesh.h,
        dt=solution.dt,
        saturation=saturation,
    )
