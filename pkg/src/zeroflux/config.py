"""Run configuration: a TOML document with five sections.

::

    [model]        builtin = "fig1a" or f / phi / u0 / g expressions and scalars
    [mesh]         kind = "interval" (a, b, n, grading) or "rectangle" (lx, ly, nx, ny)
    [scheme]       mode, dt, cfl_safety, flux, nonlinear_tol, max_iters, strategy
    [output]       dir, emit_plots, trajectory
    [diagnostics]  sweep sizes, ladder shape, verification budgets, contraction pairs

Unknown sections or keys are rejected with the offending field named.
Every default filled in here is echoed by :meth:`RunConfig.resolved`.
"""

import copy
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ZeroFluxError
from .mesh import build_interval_mesh, build_rectangle_mesh
from .model import Model, builtin_model
from .numflux import ALIASES
from .scheme import SolverConfig, cfl_limit

MODEL_KEYS = {"builtin", "name", "f", "phi", "u0", "g", "u_c", "u_max", "T", "direction", "L_f", "L_phi"}
DEFAULTS = {
    "mesh": {"kind": "interval", "a": 0.0, "b": 1.0, "n": 100, "grading": None,
             "lx": 1.0, "ly": 1.0, "nx": 20, "ny": 20},
    "scheme": {"mode": "implicit", "dt": None, "cfl_safety": 0.5, "flux": "godunov",
               "nonlinear_tol": 1e-10, "max_iters": 200, "strategy": "newton_semismooth"},
    "output": {"dir": "out", "emit_plots": False, "trajectory": True},
    "diagnostics": {
        "k_grid": 21, "xi_family": 48, "nu_budget": None, "discrete_tol": 1e-8,
        "trajectory_file": None,
        "levels": 4, "dt_scaling": "h", "norm": 1.0, "transfer": "injection",
        "paired_source": None, "random_pairs": 0, "seed": 0,
    },
}
SECTIONS = ("model", "mesh", "scheme", "output", "diagnostics")
MESH_KEYS = {"interval": {"kind", "a", "b", "n", "grading"},
             "rectangle": {"kind", "lx", "ly", "nx", "ny"}}


def _fail(field, message):
    raise ConfigError(message, field)


def _number(section, key, value, integer=False, positive=False):
    field = f"{section}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(field, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        _fail(field, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        _fail(field, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


@dataclass
class RunConfig:
    model: dict
    mesh: dict
    scheme: dict
    output: dict
    diagnostics: dict
    source: str = None

    def resolved(self, model=None, mesh=None, dt=None):
        """Fully resolved configuration for manifests."""
        out = {s: copy.deepcopy(getattr(self, s)) for s in SECTIONS}
        if model is not None:
            out["model"] = {**out["model"], **model.to_dict()}
        if mesh is not None:
            out["mesh"]["resolved"] = {"n_cells": mesh.n_cells, "h": mesh.h, "dim": mesh.dim}
        if dt is not None:
            out["scheme"]["dt"] = dt
        return out


def parse_config(text, source=None):
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse configuration: {exc}", None) from None
    return config_from_dict(raw, source)


def load_config(path):
    """Read and validate a configuration file; I/O failures propagate as OSError."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"configuration is not UTF-8: {exc}", None) from None
    return parse_config(text, str(path))


def config_from_dict(raw, source=None):
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        _fail(sorted(unknown)[0], f"unknown section (known: {', '.join(SECTIONS)})")
    for name in SECTIONS:
        if name in raw and not isinstance(raw[name], dict):
            _fail(name, "must be a table")
    model = dict(raw.get("model", {}))
    bad = set(model) - MODEL_KEYS
    if bad:
        _fail(f"model.{sorted(bad)[0]}", "unknown key")
    if "builtin" not in model and "f" not in model and "phi" not in model:
        _fail("model", "give either builtin or f/phi expressions")

    mesh = {**DEFAULTS["mesh"], **raw.get("mesh", {})}
    kind = mesh["kind"]
    if kind not in MESH_KEYS:
        _fail("mesh.kind", f"must be 'interval' or 'rectangle', got {kind!r}")
    bad = set(raw.get("mesh", {})) - MESH_KEYS[kind]
    if bad:
        _fail(f"mesh.{sorted(bad)[0]}", f"unknown key for a {kind} mesh")
    mesh = {k: v for k, v in mesh.items() if k in MESH_KEYS[kind]}

    sections = {}
    for name in ("scheme", "output", "diagnostics"):
        given = raw.get(name, {})
        bad = set(given) - set(DEFAULTS[name])
        if bad:
            _fail(f"{name}.{sorted(bad)[0]}", "unknown key")
        sections[name] = {**DEFAULTS[name], **given}

    sch = sections["scheme"]
    if sch["mode"] not in ("implicit", "explicit"):
        _fail("scheme.mode", f"must be 'implicit' or 'explicit', got {sch['mode']!r}")
    if sch["flux"] not in ALIASES:
        _fail("scheme.flux", f"unknown flux {sch['flux']!r}")
    if sch["dt"] is not None:
        sch["dt"] = _number("scheme", "dt", sch["dt"], positive=True)
    for key in ("cfl_safety", "nonlinear_tol"):
        sch[key] = _number("scheme", key, sch[key], positive=True)
    sch["max_iters"] = _number("scheme", "max_iters", sch["max_iters"], integer=True, positive=True)

    diag = sections["diagnostics"]
    for key in ("k_grid", "xi_family", "levels", "random_pairs", "seed"):
        diag[key] = _number("diagnostics", key, diag[key], integer=True)
    diag["norm"] = _number("diagnostics", "norm", diag["norm"], positive=True)
    diag["discrete_tol"] = _number("diagnostics", "discrete_tol", diag["discrete_tol"], positive=True)
    if diag["norm"] < 1:
        _fail("diagnostics.norm", "must be at least 1")
    if diag["k_grid"] < 2:
        _fail("diagnostics.k_grid", "must be at least 2")
    if diag["dt_scaling"] not in ("h", "h2"):
        _fail("diagnostics.dt_scaling", "must be 'h' or 'h2'")
    if diag["transfer"] not in ("injection", "restriction"):
        _fail("diagnostics.transfer", "must be 'injection' or 'restriction'")
    if diag["nu_budget"] is not None:
        diag["nu_budget"] = _number("diagnostics", "nu_budget", diag["nu_budget"], positive=True)
    out = sections["output"]
    if not isinstance(out["emit_plots"], bool) or not isinstance(out["trajectory"], bool):
        _fail("output.emit_plots", "flags must be true or false")
    return RunConfig(model=model, mesh=mesh, scheme=sch, output=out, diagnostics=diag, source=source)


def build_mesh(cfg):
    m = cfg.mesh
    try:
        if m["kind"] == "interval":
            return build_interval_mesh(_number("mesh", "a", m["a"]), _number("mesh", "b", m["b"]),
                                       _number("mesh", "n", m["n"], integer=True), m.get("grading"))
        return build_rectangle_mesh(_number("mesh", "lx", m["lx"]), _number("mesh", "ly", m["ly"]),
                                    _number("mesh", "nx", m["nx"], integer=True),
                                    _number("mesh", "ny", m["ny"], integer=True))
    except ConfigError:
        raise
    except ZeroFluxError as exc:
        raise type(exc)(f"mesh: {exc}") from None


def build_model(cfg, mesh=None):
    """Model from the [model] section; the domain follows the mesh when given."""
    entries = dict(cfg.model)
    base = builtin_model(entries.pop("builtin")) if "builtin" in entries else None
    scalars = {}
    for key in ("u_c", "u_max", "T", "L_f", "L_phi"):
        if key in entries:
            scalars[key] = _number("model", key, entries.pop(key))
    if "direction" in entries:
        d = entries.pop("direction")
        if not isinstance(d, list) or len(d) != 2:
            _fail("model.direction", "must be a list of two numbers")
        scalars["direction"] = tuple(_number("model", "direction", v) for v in d)
    for key in ("f", "phi", "u0", "g", "name"):
        if key in entries:
            v = entries.pop(key)
            if not isinstance(v, (str, int, float)) or isinstance(v, bool):
                _fail(f"model.{key}", "must be an expression string")
            scalars[key] = str(v)
    if mesh is not None:
        scalars["domain"] = tuple(tuple(b) for b in mesh.bounds)
    if base is None:
        if "f" not in scalars or "phi" not in scalars:
            _fail("model", "both f and phi are required without a builtin")
        scalars.setdefault("name", "custom")
        return Model(**scalars)
    if ("f" in scalars or "phi" in scalars or "u_max" in scalars):
        # changed functions invalidate the builtin's declared Lipschitz bounds
        scalars.setdefault("L_f", None)
        scalars.setdefault("L_phi", None)
    fields = {k: getattr(base, k) for k in ("f", "phi", "u_c", "u_max", "u0", "g", "T", "domain",
                                             "direction", "L_f", "L_phi", "name")}
    fields.update(scalars)
    return Model(**fields)


def solver_config(cfg):
    s = cfg.scheme
    return SolverConfig(nonlinear_tol=s["nonlinear_tol"], max_iters=s["max_iters"],
                        strategy=s["strategy"], cfl_safety=s["cfl_safety"])


def resolve_dt(cfg, model, mesh):
    """Time step from the config, defaulting to the CFL limit; explicit runs must respect it."""
    sc = solver_config(cfg)
    limit = cfl_limit(model, mesh, sc, cfg.scheme["flux"])
    dt = cfg.scheme["dt"]
    if dt is None:
        if limit == float("inf"):
            _fail("scheme.dt", "required when the model has neither convection nor diffusion")
        return limit, limit
    if cfg.scheme["mode"] == "explicit" and dt > limit * (1.0 + 1e-12):
        _fail("scheme.dt", f"{dt:.6g} exceeds the CFL limit {limit:.6g} of the explicit scheme")
    return dt, limit
