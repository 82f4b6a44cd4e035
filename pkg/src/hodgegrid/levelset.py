"""Level-set scalar fields and their sampling on grid points.

Fields are evaluated at primal vertices and at the padded dual lattice
(primal 3-cell centers plus one virtual layer outside the grid), then
perturbed away from the isovalue so that no stored value sits within
1e-5 * spacing of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .grid import GridComplex

EPS_FACTOR = 1e-5

# Bondi van der Waals radii in Angstrom.
VDW_RADII = {
    "H": 1.20,
    "C": 1.70,
    "N": 1.55,
    "O": 1.52,
    "S": 1.80,
    "P": 1.80,
    "F": 1.47,
    "Cl": 1.75,
    "Br": 1.85,
    "I": 1.98,
}


@dataclass(frozen=True)
class AtomSite:
    """One atom: position (Angstrom), element symbol, van der Waals radius."""

    position: tuple
    element: str
    vdw_radius: float

    def __post_init__(self):
        if not self.vdw_radius > 0:
            raise InvalidArgumentError(f"vdw_radius must be positive, got {self.vdw_radius}")
        object.__setattr__(self, "position", tuple(float(x) for x in self.position))


class ScalarField:
    """A scalar function of 3D points with a named kind."""

    def __init__(self, kind, fn):
        self.kind = kind
        self._fn = fn

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        vals = self._fn(pts.reshape(-1, 3))
        return float(vals[0]) if single else vals.reshape(pts.shape[:-1])


def fri_density(atoms, tau: float = 1.0) -> ScalarField:
    """Negative sum of atom-centered Gaussians with vdW-scaled widths.

    rho(x) = -sum_i exp(-(|x - x_i| / (tau * r_i))^2); strictly negative
    everywhere and tending to 0 at infinity.
    """
    atoms = list(atoms)
    if not atoms:
        raise InvalidArgumentError("fri_density needs at least one atom")
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be positive, got {tau}")
    centers = np.array([a.position for a in atoms], dtype=float)
    widths = np.array([tau * a.vdw_radius for a in atoms], dtype=float)

    def evaluate(pts):
        out = np.zeros(len(pts))
        for c, w in zip(centers, widths):
            d2 = np.sum((pts - c) ** 2, axis=1)
            out -= np.exp(-d2 / (w * w))
        return out

    return ScalarField("FRI-density", evaluate)


def sphere_sdf(center, radius) -> ScalarField:
    if not radius > 0:
        raise InvalidArgumentError("sphere radius must be positive")
    c = np.asarray(center, dtype=float)

    def evaluate(pts):
        return np.linalg.norm(pts - c, axis=1) - radius

    return ScalarField("sphere-SDF", evaluate)


def ball_union_sdf(centers, radii) -> ScalarField:
    """Min over member sphere SDFs; exact outside overlaps, and a valid
    level-set function everywhere."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if centers.shape[0] != radii.shape[0]:
        raise InvalidArgumentError("centers and radii must pair up")
    if np.any(radii <= 0):
        raise InvalidArgumentError("ball radii must all be positive")

    def evaluate(pts):
        d = np.linalg.norm(pts[:, None, :] - centers[None, :, :], axis=2) - radii[None, :]
        return d.min(axis=1)

    return ScalarField("ball-union-SDF", evaluate)


def torus_sdf(center, major_radius, minor_radius) -> ScalarField:
    """Solid torus around the z axis through `center`."""
    if not (major_radius > 0 and minor_radius > 0):
        raise InvalidArgumentError("torus radii must be positive")
    c = np.asarray(center, dtype=float)

    def evaluate(pts):
        q = pts - c
        ring = np.hypot(q[:, 0], q[:, 1]) - major_radius
        return np.hypot(ring, q[:, 2]) - minor_radius

    return ScalarField("torus-SDF", evaluate)


def shell_sdf(center, inner_radius, outer_radius) -> ScalarField:
    """Spherical shell (hollow ball); exact signed distance everywhere."""
    if not (0 < inner_radius < outer_radius):
        raise InvalidArgumentError("shell needs 0 < inner_radius < outer_radius")
    c = np.asarray(center, dtype=float)

    def evaluate(pts):
        r = np.linalg.norm(pts - c, axis=1)
        return np.maximum(r - outer_radius, inner_radius - r)

    return ScalarField("shell-SDF", evaluate)


def analytic_sdf(shape: str, **kw) -> ScalarField:
    """Dispatch on shape name: sphere, ball-union, torus, shell."""
    if shape == "sphere":
        return sphere_sdf(kw.get("center", (0, 0, 0)), kw["radius"])
    if shape == "ball-union":
        return ball_union_sdf(kw["centers"], kw["radii"])
    if shape == "torus":
        return torus_sdf(kw.get("center", (0, 0, 0)), kw["major_radius"], kw["minor_radius"])
    if shape == "shell":
        return shell_sdf(kw.get("center", (0, 0, 0)), kw["inner_radius"], kw["outer_radius"])
    raise InvalidArgumentError(f"unknown shape {shape!r}")


def tetrahedron_vertices(edge: float):
    """Vertices of a regular tetrahedron with the given edge, centered at 0."""
    v = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    return v * (edge / np.sqrt(8.0))


def four_ball_sdf(edge: float = 6.4, radius: float = 1.0) -> ScalarField:
    """Union of four balls centered at regular-tetrahedron vertices."""
    centers = tetrahedron_vertices(edge)
    return ball_union_sdf(centers, [radius] * 4)


def read_tabulated_field(path) -> ScalarField:
    """Plain-text volume: header 'DIMS nx ny nz SPACING l ORIGIN ox oy oz',
    then nx*ny*nz values in x-fastest order.  Evaluated by trilinear
    interpolation, clamped to the lattice box."""
    with open(path) as fh:
        header = fh.readline().split()
        data = np.array(fh.read().split(), dtype=float)
    if len(header) != 10 or header[0] != "DIMS" or header[4] != "SPACING" or header[6] != "ORIGIN":
        raise InvalidArgumentError(f"bad volume header in {path}")
    dims = tuple(int(x) for x in header[1:4])
    spacing = float(header[5])
    origin = np.array([float(x) for x in header[7:10]])
    if data.size != int(np.prod(dims)):
        raise InvalidArgumentError(
            f"volume {path}: expected {np.prod(dims)} values, found {data.size}"
        )
    values = data.reshape(dims, order="F")

    def evaluate(pts):
        u = (pts - origin) / spacing
        u = np.clip(u, 0.0, np.array(dims, dtype=float) - 1.0)
        i0 = np.minimum(u.astype(int), np.array(dims) - 2)
        f = u - i0
        out = np.zeros(len(pts))
        for bits in range(8):
            off = np.array([(bits >> j) & 1 for j in range(3)])
            w = np.prod(np.where(off, f, 1.0 - f), axis=1)
            idx = i0 + off
            out += w * values[idx[:, 0], idx[:, 1], idx[:, 2]]
        return out

    return ScalarField("tabulated", evaluate)


def write_tabulated_field(path, grid: GridComplex, values):
    """Write primal-vertex values in the volume text format."""
    vals = np.asarray(values, dtype=float).reshape(grid.dims, order="F")
    with open(path, "w") as fh:
        fh.write(
            "DIMS {} {} {} SPACING {!r} ORIGIN {!r} {!r} {!r}\n".format(
                *grid.dims, grid.spacing, *grid.origin
            )
        )
        flat = vals.ravel(order="F")
        for start in range(0, flat.size, 8):
            fh.write(" ".join(repr(v) for v in flat[start : start + 8]) + "\n")
    return path


def perturb_values(values, isovalue, eps):
    """Push values within eps of the isovalue out of the band.

    Values strictly below keep their side; exact ties go outside (above).
    """
    v = np.array(values, dtype=float)
    d = v - isovalue
    v[(d > -eps) & (d < 0)] = isovalue - eps
    v[(d >= 0) & (d < eps)] = isovalue + eps
    return v


def _as_lattice(values, shape):
    """Coerce to a 3D lattice array; flat inputs are taken x-fastest."""
    v = np.asarray(values, dtype=float)
    if v.shape == shape:
        return v.copy()
    return v.reshape(shape, order="F")


class SampledField:
    """Level-set values on primal vertices and the padded dual lattice,
    perturbed for one isovalue.

    `dual_values` exposes the primal 3-cell centers; the padded array keeps
    one extra layer of virtual points just outside the grid so tangential
    supports and dual volumes are defined for boundary cells.
    """

    def __init__(self, grid: GridComplex, primal_raw, dual_raw_padded, isovalue):
        self.grid = grid
        self.isovalue = float(isovalue)
        self.eps = EPS_FACTOR * grid.spacing
        self.primal_raw = _as_lattice(primal_raw, grid.dims)
        self.dual_raw_padded = _as_lattice(dual_raw_padded, tuple(n + 1 for n in grid.dims))
        self.primal = perturb_values(self.primal_raw, self.isovalue, self.eps)
        self.dual_padded = perturb_values(self.dual_raw_padded, self.isovalue, self.eps)
        self.inside_primal = self.primal <= self.isovalue
        self.inside_dual_padded = self.dual_padded <= self.isovalue
        self.boundary_warning = self._check_margin()

    def _check_margin(self):
        ip = self.inside_primal
        if ip[0, :, :].any() or ip[-1, :, :].any():
            return True
        if ip[:, 0, :].any() or ip[:, -1, :].any():
            return True
        if ip[:, :, 0].any() or ip[:, :, -1].any():
            return True
        idp = self.inside_dual_padded
        for a in range(3):
            if np.moveaxis(idp, a, 0)[0].any() or np.moveaxis(idp, a, 0)[-1].any():
                return True
        return False

    @property
    def dual_values(self):
        return self.dual_padded[1:-1, 1:-1, 1:-1]

    def with_isovalue(self, isovalue):
        """Same raw samples, re-perturbed for a different isovalue."""
        return SampledField(self.grid, self.primal_raw, self.dual_raw_padded, isovalue)


def sample_on_grid(field: ScalarField, grid: GridComplex, isovalue: float) -> SampledField:
    """Evaluate `field` at primal and padded dual points and perturb."""
    primal = field(grid.vertex_positions()).reshape(grid.dims, order="F")
    dual = field(grid.dual_point_positions())
    return SampledField(grid, np.ascontiguousarray(primal), dual, isovalue)
