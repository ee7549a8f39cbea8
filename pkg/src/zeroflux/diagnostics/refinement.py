"""Refinement ladders: Cauchy differences, oscillation proxy, boundary-layer probe."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..mesh import Mesh, build_interval_mesh
from ..scheme import SolverConfig, run_evolution, step_count
from .functionals import l1_space_time

TRANSFERS = ("injection", "restriction")


def _level_mesh(model, level):
    if isinstance(level, Mesh):
        return level
    (a, b), = model.domain[:1]
    return build_interval_mesh(a, b, int(level))


def _solve_level(args):
    model, mesh, dt, flux, cfg, mode, T = args
    return run_evolution(model, mesh, dt, flux, cfg, mode, T=T)


def solve_ladder(model, levels, flux="godunov", cfg=None, mode="implicit", T=None, jobs=1):
    """Run every ``(n_cells or Mesh, dt)`` level; ``jobs > 1`` uses worker processes."""
    cfg = cfg or SolverConfig()
    tasks = [(model, _level_mesh(model, level), float(dt), flux, cfg, mode, T) for level, dt in levels]
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            return list(pool.map(_solve_level, tasks))
    return [_solve_level(t) for t in tasks]


def cell_parents(coarse, fine):
    """Coarse cell containing each fine cell; raises unless ``fine`` is nested in ``coarse``."""
    if coarse.dim != fine.dim:
        raise ParameterError("levels differ in dimension")
    if not np.allclose(np.asarray(coarse.bounds), np.asarray(fine.bounds), rtol=0, atol=1e-12):
        raise ParameterError("levels cover different domains")
    parent = coarse.locate(fine.centers)
    covered = np.bincount(parent, fine.volumes, coarse.n_cells)
    if not np.allclose(covered, coarse.volumes, rtol=1e-10, atol=0.0):
        raise ParameterError("levels are not nested: fine cells straddle coarse cells")
    # every fine cell must lie inside its parent box
    boxes_c = coarse.cell_boxes()[parent]
    boxes_f = fine.cell_boxes()
    tol = 1e-12 * max(hi - lo for lo, hi in coarse.bounds)
    if np.any(boxes_f[..., 0] < boxes_c[..., 0] - tol) or np.any(boxes_f[..., 1] > boxes_c[..., 1] + tol):
        raise ParameterError("levels are not nested: fine cells straddle coarse cells")
    return parent


def time_ratio(coarse, fine):
    """Integer number of fine steps per coarse step; both must reach the same horizon."""
    r = coarse.dt / fine.dt
    ri = int(round(r))
    if ri < 1 or abs(r - ri) > 1e-9 * r:
        raise ParameterError("time steps are not nested (dt ratio is not an integer)")
    if coarse.n_steps * ri != fine.n_steps:
        raise ParameterError("levels reach different horizons")
    return ri


def level_difference(coarse, fine, p=1.0, transfer="injection"):
    """||u_coarse - u_fine||_{L^p(Q)} after transferring one field onto the other's grid.

    ``injection`` spreads each coarse value over its fine cells and steps
    (exact for nested piecewise constants).  ``restriction`` averages the
    fine field over each coarse cell and step and compares on the coarse
    grid; it filters the O(h) gap between a smooth field and its cell
    averages, exposing the order of the scheme itself.
    """
    if transfer not in TRANSFERS:
        raise ParameterError(f"transfer must be one of {TRANSFERS}")
    parent = cell_parents(coarse.mesh, fine.mesh)
    r = time_ratio(coarse, fine)
    if fine.n_steps == 0:
        return 0.0
    Vf = fine.steps[1:]
    Vc = coarse.steps[1:]
    if transfer == "injection":
        step_of = np.arange(fine.n_steps) // r
        diff = np.abs(Vf - Vc[step_of][:, parent]) ** p
        return float((fine.dt * np.sum(diff @ fine.mesh.volumes)) ** (1.0 / p))
    n_c = coarse.mesh.n_cells
    weighted = Vf * fine.mesh.volumes
    space = np.stack([np.bincount(parent, row, n_c) for row in weighted]) / coarse.mesh.volumes
    avg = space.reshape(coarse.n_steps, r, n_c).mean(axis=1)
    diff = np.abs(avg - Vc) ** p
    return float((coarse.dt * np.sum(diff @ coarse.mesh.volumes)) ** (1.0 / p))


@dataclass
class ConvergenceTable:
    levels: list          # (n_cells, dt)
    errors: list          # e_j between level j and j + 1
    ratios: list          # e_j / e_{j+1}
    norm: float
    transfer: str
    solutions: list = field(default_factory=list, repr=False)

    @property
    def strictly_decreasing(self):
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    def rows(self):
        out = []
        for j, (n, dt) in enumerate(self.levels):
            e = self.errors[j] if j < len(self.errors) else None
            ratio = self.ratios[j - 1] if 0 < j <= len(self.ratios) else None
            out.append((n, dt, e, ratio))
        return out

    def to_dict(self):
        return {"levels": [list(l) for l in self.levels], "errors": self.errors, "ratios": self.ratios,
                "norm": self.norm, "transfer": self.transfer,
                "strictly_decreasing": self.strictly_decreasing}


def refinement_study(model, flux="godunov", levels=(), p=1.0, transfer="injection", cfg=None,
                     mode="implicit", T=None, jobs=1, solutions=None):
    """Cauchy differences e_j = ||u_j - u_{j+1}||_{L^p(Q)} along a nested ladder.

    ``levels`` lists ``(n_cells, dt)`` (uniform interval on the model's
    domain) or ``(Mesh, dt)``.  Precomputed ``solutions`` skip the runs.
    """
    levels = list(levels)
    if len(levels) < 2:
        raise ParameterError("a refinement study needs at least two levels")
    if not p >= 1:
        raise ParameterError("p must be at least 1")
    if transfer not in TRANSFERS:
        raise ParameterError(f"transfer must be one of {TRANSFERS}")
    meshes = [_level_mesh(model, level) for level, _ in levels]
    horizon = model.T if T is None else T
    for (mc, (_, dc)), (mf, (_, df)) in zip(zip(meshes, levels), zip(meshes[1:], levels[1:])):
        cell_parents(mc, mf)
        r = dc / df
        if round(r) < 1 or abs(r - round(r)) > 1e-9 * r:
            raise ParameterError("time steps are not nested (dt ratio is not an integer)")
        if step_count(horizon, dc) * round(r) != step_count(horizon, df):
            raise ParameterError("levels reach different horizons")
    if solutions is None:
        solutions = solve_ladder(model, list(zip(meshes, (dt for _, dt in levels))), flux, cfg, mode, T, jobs)
    errors = [level_difference(a, b, p, transfer) for a, b in zip(solutions, solutions[1:])]
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(errors, errors[1:])]
    return ConvergenceTable(
        levels=[(m.n_cells, float(dt)) for m, (_, dt) in zip(meshes, levels)],
        errors=errors,
        ratios=ratios,
        norm=float(p),
        transfer=transfer,
        solutions=solutions,
    )


def oscillation_proxy(coarse, fine):
    """||u_coarse - u_fine||_{L1(Q)} / ||u_fine||_{L1(Q)} with the coarse field injected."""
    denom = l1_space_time(fine)
    gap = level_difference(coarse, fine, 1.0, "injection")
    if denom == 0.0:
        return 0.0 if gap == 0.0 else float("inf")
    return gap / denom


@dataclass
class BoundaryLayerReport:
    h: list
    boundary_max: list        # max over time of the boundary-cell values
    interior_l1: list         # ||u||_{L1((0,T) x interior)}
    interior_gaps: list       # Cauchy differences restricted to the interior
    interior: tuple
    boundary_growing: bool
    interior_cauchy: bool

    def rows(self):
        out = []
        for j, h in enumerate(self.h):
            gap = self.interior_gaps[j] if j < len(self.interior_gaps) else None
            out.append((h, self.boundary_max[j], self.interior_l1[j], gap))
        return out

    def to_dict(self):
        return dict(self.__dict__)


def _interior_mask(mesh, interior):
    lo, hi = interior
    boxes = mesh.cell_boxes()
    return (boxes[:, 0, 0] >= lo - 1e-12) & (boxes[:, 0, 1] <= hi + 1e-12)


def boundary_layer_probe(solutions, interior=(0.1, 0.8)):
    """Boundary-cell maxima and interior L1 behaviour along a 1D ladder.

    Under f(0) = f(u_max) = 0 the boundary maxima stay below u_max; when it
    fails, mass piles up against the wall and the boundary-cell maximum
    grows with refinement while the interior keeps converging.
    """
    if len(solutions) < 2:
        raise ParameterError("the probe needs at least two refinement levels")
    h, bmax, l1 = [], [], []
    for s in solutions:
        if s.mesh.dim != 1:
            raise ParameterError("the boundary-layer probe is one-dimensional")
        cells = np.unique(s.mesh.bface_cell)
        h.append(s.mesh.h)
        bmax.append(float(s.steps[:, cells].max()))
        mask = _interior_mask(s.mesh, interior)
        l1.append(float(s.dt * np.sum(np.abs(s.steps[1:, mask]) @ s.mesh.volumes[mask])))
    gaps = []
    for c, f in zip(solutions, solutions[1:]):
        parent = cell_parents(c.mesh, f.mesh)
        r = time_ratio(c, f)
        mask = _interior_mask(f.mesh, interior)
        step_of = np.arange(f.n_steps) // r
        diff = np.abs(f.steps[1:] - c.steps[1:][step_of][:, parent])[:, mask]
        gaps.append(float(f.dt * np.sum(diff @ f.mesh.volumes[mask])))
    return BoundaryLayerReport(
        h=h,
        boundary_max=bmax,
        interior_l1=l1,
        interior_gaps=gaps,
        interior=tuple(interior),
        boundary_growing=all(b > a for a, b in zip(bmax, bmax[1:])),
        interior_cauchy=all(b < a for a, b in zip(gaps, gaps[1:])),
    )
