"""Scalar functionals of a completed trajectory and fault localisation."""

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..scheme import FluxBalance
from .entropy import cell_entropy_defects


def mass_drift(solution):
    """sum_K m(K) u_K^n - sum_K m(K) u_K^0 for every stored step n."""
    mass = solution.mass()
    return mass - mass[0]


def relative_mass_drift(solution):
    """Mass drift divided by the initial mass (by |Omega| u_max when that mass vanishes)."""
    mass = solution.mass()
    scale = abs(mass[0])
    if scale == 0.0:
        scale = solution.mesh.measure * solution.model.u_max
    return (mass - mass[0]) / scale


def _flux_states(solution):
    return solution.steps[1:] if solution.mode == "implicit" else solution.steps[:-1]


def weak_bv_functional(solution):
    """Q = sum_n dt sum_sigma m(sigma) |c| (|F(a, b) - f(a)| + |F(a, b) - f(b)|).

    ``(a, b)`` are the upwind-ordered states of the interface and ``c`` the
    transport component along its normal (1 in magnitude in 1D).  The states
    are those at which the scheme evaluates its fluxes.
    """
    if solution.n_steps == 0:
        return 0.0
    system = FluxBalance(solution.model, solution.mesh, solution.flux)
    U = _flux_states(solution)
    a, b = system._ordered(U[:, system.K], U[:, system.L])
    F = system.flux(a, b)
    f = solution.model.f
    dev = np.abs(F - f(a)) + np.abs(F - f(b))
    return float(solution.dt * np.sum(dev @ np.abs(system.weight)))


def discrete_l2h1_functional(solution):
    """E = sum_n dt sum_sigma tau_sigma (phi(u_L^{n+1}) - phi(u_K^{n+1}))^2."""
    if solution.n_steps == 0:
        return 0.0
    mesh = solution.mesh
    V = solution.steps[1:]
    P = np.asarray(solution.model.phi(V), dtype=float) * np.ones_like(V)
    K, L = mesh.iface_cells[:, 0], mesh.iface_cells[:, 1]
    return float(solution.dt * np.sum((P[:, L] - P[:, K]) ** 2 @ mesh.transmissivity))


def balance_defects(solution):
    """Residual of the scheme's balance per step and cell, shape ``(N, n)``.

    Zero up to solver tolerance for a genuine trajectory; a tampered entry
    shows up in the affected cell and its neighbours.
    """
    system = FluxBalance(solution.model, solution.mesh, solution.flux)
    U = solution.steps
    out = np.empty((solution.n_steps, solution.mesh.n_cells))
    for n in range(solution.n_steps):
        at = U[n + 1] if solution.mode == "implicit" else U[n]
        out[n] = solution.mesh.volumes * (U[n + 1] - U[n]) / solution.dt + system.divergence(at)
    return out


@dataclass
class Violation:
    kind: str          # "balance" or "entropy"
    step: int          # index n + 1 of the offending new level
    cell: int
    size: float
    k: float = None

    def to_dict(self):
        return dict(self.__dict__)


def locate_violations(solution, tol=1e-8, ks=None, limit=20):
    """Cells and steps where the balance or a cell entropy inequality fails.

    ``tol`` is compared with defects scaled by dt, i.e. with amounts of mass
    or entropy per step.  Results are sorted by size, largest first.
    """
    found = []
    bal = np.abs(balance_defects(solution)) * solution.dt
    for n, K in zip(*np.nonzero(bal > tol)):
        found.append(Violation("balance", int(n) + 1, int(K), float(bal[n, K])))
    ks = [0.0, 0.5 * solution.model.u_max, solution.model.u_max] if ks is None else ks
    for k in ks:
        d = cell_entropy_defects(solution, k) * solution.dt
        for n, K in zip(*np.nonzero(d > tol)):
            found.append(Violation("entropy", int(n) + 1, int(K), float(d[n, K]), float(k)))
    found.sort(key=lambda v: -v.size)
    return found[:limit]


def l1_space_time(solution):
    """||u||_{L1(Q)} of the piecewise-constant field."""
    if solution.n_steps == 0:
        return 0.0
    return float(solution.dt * np.sum(np.abs(solution.steps[1:]) @ solution.mesh.volumes))


def space_time_difference(a, b, p=1.0):
    """||u_a - u_b||_{L^p(Q)} for two trajectories on the same mesh and time grid."""
    if a.steps.shape != b.steps.shape or not np.isclose(a.dt, b.dt, rtol=1e-12):
        raise ParameterError("trajectories live on different grids")
    diff = np.abs(a.steps[1:] - b.steps[1:]) ** p
    return float((a.dt * np.sum(diff @ a.mesh.volumes)) ** (1.0 / p))
