"""CSV and JSON artifacts plus standalone plot scripts.

Trajectory CSV columns are ``t,cell,x,u`` in 1D and ``t,cell,x,y,u`` on
rectangles, one row per stored step and cell, cells in storage order.  All
floats are written with 17 significant digits so a round trip is exact.
"""

import json
import os

import numpy as np

from .errors import InvalidDataError
from .scheme import DiscreteSolution, as_flux

FMT = "%.17g"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return FMT % v
    return str(v)


def write_rows(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def trajectory_table(solution):
    mesh = solution.mesh
    n_cells, n_rec = mesh.n_cells, solution.steps.shape[0]
    t = np.repeat(solution.times, n_cells)
    cells = np.tile(np.arange(n_cells), n_rec)
    coords = np.tile(mesh.centers, (n_rec, 1))
    return t, cells, coords, solution.steps.reshape(-1)


def write_trajectory(path, solution):
    t, cells, coords, u = trajectory_table(solution)
    dim = solution.mesh.dim
    header = "t,cell," + ("x" if dim == 1 else "x,y") + ",u"
    data = np.column_stack([t, cells, coords, u])
    fmt = [FMT, "%d"] + [FMT] * dim + [FMT]
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt=fmt)
    return path


def read_trajectory(path, model, mesh, flux, mode="implicit"):
    """Rebuild a :class:`DiscreteSolution` from a trajectory CSV written by :func:`write_trajectory`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    expected = ["t", "cell", "x", "u"] if mesh.dim == 1 else ["t", "cell", "x", "y", "u"]
    if header != expected:
        raise InvalidDataError(f"{path}: unexpected header {header}, want {expected}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise InvalidDataError(f"{path}: {exc}") from None
    n = mesh.n_cells
    if data.shape[0] == 0 or data.shape[0] % n:
        raise InvalidDataError(f"{path}: row count {data.shape[0]} is not a multiple of {n} cells")
    steps = data[:, -1].reshape(-1, n)
    cells = data[:, 1].reshape(-1, n)
    if not np.all(cells == np.arange(n)):
        raise InvalidDataError(f"{path}: cells are not listed in storage order")
    times = data[:, 0].reshape(-1, n)[:, 0]
    if steps.shape[0] < 2:
        raise InvalidDataError(f"{path}: need at least two time levels")
    dt = float(times[1] - times[0])
    if not dt > 0 or not np.allclose(np.diff(times), dt, rtol=1e-9, atol=0.0):
        raise InvalidDataError(f"{path}: time levels are not uniformly spaced")
    if not np.all(np.isfinite(steps)):
        raise InvalidDataError(f"{path}: non-finite values")
    return DiscreteSolution(mesh=mesh, dt=dt, steps=steps, model=model, flux=as_flux(flux, model),
                            mode=mode)


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    return repr(obj)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


PROFILE_SCRIPT = '''"""Plot final-time profiles from the CSV files next to this script."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
names = {names!r}
fig, axes = plt.subplots(1, len(names), figsize=(4 * len(names), 3.2), squeeze=False)
for ax, name in zip(axes[0], names):
    with open(here / (name + ".csv")) as fh:
        rows = list(csv.DictReader(fh))
    ax.step([float(r["x"]) for r in rows], [float(r["u"]) for r in rows], where="mid")
    ax.set_title(name)
    ax.set_xlabel("x")
axes[0][0].set_ylabel("u")
fig.tight_layout()
out = here / "{stem}.png"
fig.savefig(out, dpi=150)
print(out)
'''

LADDER_SCRIPT = '''"""Plot a refinement table from the CSV file next to this script."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / "{csv_name}") as fh:
    rows = [r for r in csv.DictReader(fh)]
x = [float(r["{x_col}"]) for r in rows if r["{y_col}"]]
y = [float(r["{y_col}"]) for r in rows if r["{y_col}"]]
fig, ax = plt.subplots(figsize=(4.5, 3.2))
ax.loglog(x, y, "o-")
ax.set_xlabel("{x_col}")
ax.set_ylabel("{y_col}")
fig.tight_layout()
out = here / "{stem}.png"
fig.savefig(out, dpi=150)
print(out)
'''


def write_profile_script(directory, names, stem="profiles"):
    path = os.path.join(directory, f"plot_{stem}.py")
    with open(path, "w") as fh:
        fh.write(PROFILE_SCRIPT.format(names=list(names), stem=stem))
    return path


def write_ladder_script(directory, csv_name, x_col, y_col, stem):
    path = os.path.join(directory, f"plot_{stem}.py")
    with open(path, "w") as fh:
        fh.write(LADDER_SCRIPT.format(csv_name=csv_name, x_col=x_col, y_col=y_col, stem=stem))
    return path
