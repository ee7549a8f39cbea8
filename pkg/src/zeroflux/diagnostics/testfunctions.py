"""Nonnegative tensor-product bumps xi(t, x) = theta(t) psi(x).

Each factor is the polynomial bump b(s) = (1 - s^2)^3 on |s| < 1, rescaled to
an interval.  The temporal factor is supported in a window whose right end is
at most the horizon, so xi(T, .) = 0.  Spatial boxes may stick out of the
domain; those members exercise the boundary term of the residual.

Because the bump is a polynomial, its antiderivative is available in closed
form and integrals of xi over cells, faces and time steps are exact.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError

_B_TOTAL = 32.0 / 35.0


def bump(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 3, 0.0)


def bump_slope(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, -6.0 * s * (1.0 - s * s) ** 2, 0.0)


def bump_integral(s):
    """Antiderivative of the bump from -1, constant outside [-1, 1]."""
    s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
    s2 = s * s
    return s * (1.0 - s2 + s2 * s2 * (0.6 - s2 / 7.0)) + 0.5 * _B_TOTAL


@dataclass(frozen=True)
class TestFunction:
    """theta(t) = b((t - t_center)/t_radius), psi(x) = prod_d b((x_d - c_d)/r_d)."""

    __test__ = False  # keep pytest from collecting this class

    t_center: float
    t_radius: float
    x_center: tuple
    x_radius: tuple
    label: str = ""

    def __post_init__(self):
        if not self.t_radius > 0 or any(not r > 0 for r in self.x_radius):
            raise ParameterError("bump radii must be positive")
        if len(self.x_center) != len(self.x_radius):
            raise ParameterError("center and radius dimensions differ")

    @property
    def dim(self):
        return len(self.x_center)

    @property
    def t_support(self):
        return (self.t_center - self.t_radius, self.t_center + self.t_radius)

    # time factor
    def theta(self, t):
        return bump((np.asarray(t, dtype=float) - self.t_center) / self.t_radius)

    def theta_dot(self, t):
        return bump_slope((np.asarray(t, dtype=float) - self.t_center) / self.t_radius) / self.t_radius

    def theta_integral(self, t0, t1):
        """Integral of theta over [t0, t1] (elementwise)."""
        s0 = (np.asarray(t0, dtype=float) - self.t_center) / self.t_radius
        s1 = (np.asarray(t1, dtype=float) - self.t_center) / self.t_radius
        return self.t_radius * (bump_integral(s1) - bump_integral(s0))

    # space factor
    def _scaled(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        return (x - np.asarray(self.x_center)) / np.asarray(self.x_radius)

    def psi(self, x):
        return np.prod(bump(self._scaled(x)), axis=1)

    def grad_psi(self, x):
        s = self._scaled(x)
        vals = bump(s)
        out = np.empty_like(s)
        for d in range(self.dim):
            others = np.prod(np.delete(vals, d, axis=1), axis=1) if self.dim > 1 else 1.0
            out[:, d] = bump_slope(s[:, d]) / self.x_radius[d] * others
        return out

    def _axis_integral(self, d, lo, hi):
        c, r = self.x_center[d], self.x_radius[d]
        return r * (bump_integral((hi - c) / r) - bump_integral((lo - c) / r))

    def _axis_values(self, d, x):
        return bump((x - self.x_center[d]) / self.x_radius[d])

    def box_integrals(self, boxes):
        """Exact integrals of psi and of each partial of psi over axis-aligned boxes.

        ``boxes`` has shape ``(n, dim, 2)``.  Returns ``(I, G)`` with ``I`` of
        shape ``(n,)`` and ``G`` of shape ``(n, dim)``.
        """
        lo, hi = boxes[..., 0], boxes[..., 1]
        per_axis = np.stack([self._axis_integral(d, lo[:, d], hi[:, d]) for d in range(self.dim)], axis=1)
        jump = np.stack([self._axis_values(d, hi[:, d]) - self._axis_values(d, lo[:, d])
                         for d in range(self.dim)], axis=1)
        I = np.prod(per_axis, axis=1)
        G = np.empty_like(per_axis)
        for d in range(self.dim):
            G[:, d] = jump[:, d] * (np.prod(np.delete(per_axis, d, axis=1), axis=1) if self.dim > 1 else 1.0)
        return I, G

    def face_integrals(self, centers, normals, measures):
        """Exact integrals of psi over axis-aligned faces (point values in 1D)."""
        if self.dim == 1:
            return self.psi(centers)
        out = np.empty(centers.shape[0])
        for i, (c, nrm, m) in enumerate(zip(centers, normals, measures)):
            along = 1 if abs(nrm[0]) > 0.5 else 0
            fixed = 1 - along
            out[i] = self._axis_values(fixed, c[fixed]) * self._axis_integral(
                along, c[along] - 0.5 * m, c[along] + 0.5 * m)
        return out

    def to_dict(self):
        return {"label": self.label, "t_center": self.t_center, "t_radius": self.t_radius,
                "x_center": list(self.x_center), "x_radius": list(self.x_radius)}


TEMPORAL = (("early", 0.125, 0.375), ("mid", 0.5, 0.25), ("late", 0.75, 0.25), ("full", 0.25, 0.75))


def _spatial_placements(bounds):
    if len(bounds) == 1:
        (a, b), = bounds
        length = b - a
        out = []
        for rf in (0.15, 0.3):
            for cf in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
                out.append(((a + cf * length,), (rf * length,), f"x{cf:.1f}r{rf:.2f}"))
        return out
    (ax, bx), (ay, by) = bounds
    lx, ly = bx - ax, by - ay
    size = min(lx, ly)
    spots = ((0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.5, 0.0), (0.0, 0.5), (0.25, 0.75))
    out = []
    for rf in (0.2, 0.4):
        for fx, fy in spots:
            out.append(((ax + fx * lx, ay + fy * ly), (rf * size, rf * size),
                        f"x{fx:.2f}y{fy:.2f}r{rf:.1f}"))
    return out


def bump_family(bounds, T, count=None):
    """Structured family: 12 spatial boxes (interior and boundary-overlapping) x 4 time windows.

    ``count`` truncates the family; the ordering interleaves time windows so a
    short prefix still mixes early, late, interior and boundary members.
    """
    if not T > 0:
        raise ParameterError("the horizon must be positive to build test functions")
    members = []
    for center, radius, tag in _spatial_placements(bounds):
        for name, cf, rf in TEMPORAL:
            members.append(TestFunction(cf * T, rf * T, tuple(center), tuple(radius), f"{tag}-{name}"))
    # every block of 12 pairs each spatial box with one window, cycling windows
    order = sorted(range(len(members)), key=lambda i: ((i % 4 + i // 4) % 4, i))
    members = [members[i] for i in order]
    if count is not None:
        if count < 1:
            raise ParameterError("xi_family must be at least 1")
        members = members[:count]
    return members
