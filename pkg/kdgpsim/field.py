# -*- coding: utf-8 -*-
"""Ground-truth scalar fields and noisy point measurements."""
import enum
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import LinAlgError, cholesky, eigh

from kdgpsim.basis import phi_matrix
from kdgpsim.errors import InvalidArgumentError, NumericalFailureError
from kdgpsim.gp_core import se_gram

log = logging.getLogger(__name__)

DENSE_SAMPLING_LIMIT = 70 * 70
SAMPLING_JITTER = 1e-8
STABILITY_SAFETY = 0.9
SOURCE_WIDTH = 0.007
CSV_HEADER = "nx,ny,xmin,xmax,ymin,ymax,t"


class FieldSampler(str, enum.Enum):
    """How a stationary truth field is drawn."""

    DENSE = "dense"
    BASIS = "basis"


@dataclass(frozen=True)
class GridSpec:
    """Rectangle ``(xmin, xmax, ymin, ymax)`` sampled on an ``nx`` by ``ny`` node grid."""

    bounds: tuple
    nx: int
    ny: int

    def __post_init__(self):
        """Validate the grid."""
        xmin, xmax, ymin, ymax = self.bounds
        if xmax <= xmin or ymax <= ymin:
            raise InvalidArgumentError(f"degenerate bounds {self.bounds!r}")
        if self.nx < 2 or self.ny < 2:
            raise InvalidArgumentError("a grid needs at least 2 nodes per axis")
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))

    @property
    def x(self):
        """Node coordinates along the first axis."""
        return np.linspace(self.bounds[0], self.bounds[1], self.nx)

    @property
    def y(self):
        """Node coordinates along the second axis."""
        return np.linspace(self.bounds[2], self.bounds[3], self.ny)

    @property
    def spacing(self):
        """``(dx, dy)``."""
        return (self.x[1] - self.x[0], self.y[1] - self.y[0])

    def points(self):
        """All node coordinates, row-major, as an ``(nx * ny, 2)`` array."""
        xx, yy = np.meshgrid(self.x, self.y, indexing="ij")
        return np.column_stack((xx.ravel(), yy.ravel()))


@dataclass(frozen=True)
class FieldGrid:
    """A scalar field discretised on a :class:`GridSpec`, at simulation time ``time``."""

    spec: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        """Validate the values."""
        values = np.array(self.values, dtype=float)
        if values.shape != (self.spec.nx, self.spec.ny):
            raise InvalidArgumentError(
                f"values shape {values.shape} does not match grid {self.spec.nx}x{self.spec.ny}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalFailureError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, spec, time=0.0):
        """An all-zero field."""
        return cls(spec=spec, values=np.zeros((spec.nx, spec.ny)), time=time)

    @property
    def nx(self):
        """Nodes along the first axis."""
        return self.spec.nx

    @property
    def ny(self):
        """Nodes along the second axis."""
        return self.spec.ny

    @property
    def domain(self):
        """Rectangle bounds."""
        return self.spec.bounds

    def contains(self, x):
        """True when ``x`` lies inside the rectangle."""
        xmin, xmax, ymin, ymax = self.spec.bounds
        return xmin <= x[0] <= xmax and ymin <= x[1] <= ymax


def sample_gp_field(hp, spec, rng, sampler=FieldSampler.DENSE, basis=None):
    """Draw a field from the GP prior.

    ``dense`` factorises the exact SE Gram matrix of the grid; ``basis`` draws
    weights ``w_e ~ N(0, S(lambda_e))`` and sums the eigenfunctions.
    """
    sampler = FieldSampler(sampler)
    points = spec.points()
    if sampler is FieldSampler.BASIS:
        if basis is None:
            raise InvalidArgumentError("basis sampling needs a BasisSet")
        weights = rng.standard_normal(basis.E) * np.sqrt(basis.spectral_densities)
        values = phi_matrix(points, basis) @ weights
        return FieldGrid(spec=spec, values=values.reshape(spec.nx, spec.ny))

    n = len(points)
    if n > DENSE_SAMPLING_LIMIT:
        raise InvalidArgumentError(f"dense sampling limited to {DENSE_SAMPLING_LIMIT} nodes")
    gram = se_gram(points, points, hp)
    z = rng.standard_normal(n)
    try:
        lower = cholesky(gram + SAMPLING_JITTER * hp.sigma_s**2 * np.eye(n), lower=True)
        values = lower @ z
    except LinAlgError:
        log.warning("Cholesky of %d-node Gram failed, sampling by eigendecomposition", n)
        try:
            eigval, eigvec = eigh(gram)
        except LinAlgError as exc:
            raise NumericalFailureError("cannot factorise the field covariance") from exc
        values = eigvec @ (np.sqrt(np.maximum(eigval, 0.0)) * z)
    return FieldGrid(spec=spec, values=values.reshape(spec.nx, spec.ny))


def diffusivity(x):
    """``D(x) = 0.005 (x1^2 + x2^2) + 0.01 x1 x2 + 0.02``."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    return 0.005 * (x1**2 + x2**2) + 0.01 * x1 * x2 + 0.02


def velocity(x, t):
    """``v(x, t) = [2 (x1 + x2 - t), x2 - x1 + t]``."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack((2.0 * (x1 + x2 - t), x2 - x1 + t), axis=-1)


def source(x, c):
    """Gaussian source ``exp(-|x - c|^2 / 0.007)``."""
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(c, dtype=float)
    return np.exp(-np.sum(d**2, axis=-1) / SOURCE_WIDTH)


def _face_points(spec):
    dx, dy = spec.spacing
    x, y = spec.x, spec.y
    # faces between consecutive nodes along each axis
    xf, yc = np.meshgrid(0.5 * (x[:-1] + x[1:]), y, indexing="ij")
    xc, yf = np.meshgrid(x, 0.5 * (y[:-1] + y[1:]), indexing="ij")
    return np.stack((xf, yc), axis=-1), np.stack((xc, yf), axis=-1)


def stable_time_step(grid, diffusivity=diffusivity, velocity=velocity, time=None):
    """Largest explicit step allowed, ``0.9 min(h^2 / (4 D_max), h / |v|_max)``."""
    time = grid.time if time is None else time
    h = min(grid.spec.spacing)
    points = grid.spec.points()
    d_max = float(np.max(diffusivity(points)))
    v_max = float(np.max(np.linalg.norm(velocity(points, time), axis=-1)))
    bounds = []
    if d_max > 0:
        bounds.append(h**2 / (4.0 * d_max))
    if v_max > 0:
        bounds.append(h / v_max)
    return STABILITY_SAFETY * min(bounds) if bounds else np.inf


def convection_diffusion_step(
    grid, dt, c, diffusivity=diffusivity, velocity=velocity, source=source
):
    """Advance ``df/dt = div(D grad f) + div(v f) + C`` by one explicit Euler step.

    Diffusion uses central differences with face-averaged ``D``; the convective
    flux is upwinded; boundary nodes are held at zero.
    """
    if dt <= 0:
        raise InvalidArgumentError(f"time step must be positive, got {dt!r}")
    limit = stable_time_step(grid, diffusivity, velocity)
    if dt > limit:
        raise InvalidArgumentError(f"dt={dt:.4g} exceeds the stability bound {limit:.4g}")

    spec = grid.spec
    dx, dy = spec.spacing
    f = np.array(grid.values)
    f[0, :] = f[-1, :] = f[:, 0] = f[:, -1] = 0.0
    faces_x, faces_y = _face_points(spec)

    # diffusive fluxes D df/dn on faces
    flux_dx = diffusivity(faces_x) * (f[1:, :] - f[:-1, :]) / dx
    flux_dy = diffusivity(faces_y) * (f[:, 1:] - f[:, :-1]) / dy

    # +div(v f) transports f with velocity -v; upwind on that transport velocity
    wx = -velocity(faces_x, grid.time)[..., 0]
    wy = -velocity(faces_y, grid.time)[..., 1]
    conv_x = np.maximum(wx, 0.0) * f[:-1, :] + np.minimum(wx, 0.0) * f[1:, :]
    conv_y = np.maximum(wy, 0.0) * f[:, :-1] + np.minimum(wy, 0.0) * f[:, 1:]

    net_x = flux_dx - conv_x
    net_y = flux_dy - conv_y
    rate = np.zeros_like(f)
    rate[1:-1, :] += (net_x[1:, :] - net_x[:-1, :]) / dx
    rate[:, 1:-1] += (net_y[:, 1:] - net_y[:, :-1]) / dy
    rate += source(spec.points(), c).reshape(spec.nx, spec.ny)

    updated = f + dt * rate
    updated[0, :] = updated[-1, :] = updated[:, 0] = updated[:, -1] = 0.0
    if not np.all(np.isfinite(updated)):
        raise NumericalFailureError(f"non-finite field after step at t={grid.time:.4g}")
    return FieldGrid(spec=spec, values=updated, time=grid.time + dt)


def advance(grid, duration, c, **terms):
    """Integrate for ``duration`` with sub-steps inside the combined stability bound."""
    remaining = float(duration)
    while remaining > 1e-12:
        h = min(grid.spec.spacing)
        points = grid.spec.points()
        d_max = float(np.max(terms.get("diffusivity", diffusivity)(points)))
        v = np.abs(terms.get("velocity", velocity)(points, grid.time))
        speed = float(np.max(v[:, 0]) + np.max(v[:, 1]))
        # the joint advective + diffusive rate keeps every sub-step inside both bounds
        rate = 4.0 * d_max / h**2 + speed / h
        dt = min(remaining, STABILITY_SAFETY / rate if rate > 0 else remaining)
        grid = convection_diffusion_step(grid, dt, c, **terms)
        remaining -= dt
    return grid


def measure(field, x, sigma_n, rng):
    """Bilinear interpolation of the grid at ``x`` plus ``N(0, sigma_n^2)`` noise."""
    x = np.asarray(x, dtype=float)
    if not field.contains(x):
        raise InvalidArgumentError(f"measurement point {tuple(x)} outside {field.domain}")
    interpolator = RegularGridInterpolator((field.spec.x, field.spec.y), field.values)
    value = float(interpolator(x[None, :])[0])
    return value + float(sigma_n) * float(rng.standard_normal())


def export_grid_csv(field, path):
    """Write a grid snapshot: header line, metadata line, then ``nx`` rows of values."""
    xmin, xmax, ymin, ymax = field.domain
    meta = f"{field.nx},{field.ny},{xmin!r},{xmax!r},{ymin!r},{ymax!r},{field.time!r}"
    with open(path, "w") as handle:
        handle.write(CSV_HEADER + "\n" + meta + "\n")
        np.savetxt(handle, field.values, delimiter=",", fmt="%.17g")


def load_grid_csv(path):
    """Read a snapshot written by :func:`export_grid_csv`."""
    with open(path) as handle:
        handle.readline()
        meta = handle.readline().strip().split(",")
        values = np.loadtxt(handle, delimiter=",", ndmin=2)
    nx, ny = int(meta[0]), int(meta[1])
    bounds = tuple(float(v) for v in meta[2:6])
    return FieldGrid(spec=GridSpec(bounds, nx, ny), values=values, time=float(meta[6]))
