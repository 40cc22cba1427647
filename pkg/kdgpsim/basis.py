# -*- coding: utf-8 -*-
"""Reduced-rank Hilbert-space eigen-system of the squared-exponential kernel.

The Laplacian on the box ``[-L, L]^2`` (shifted to ``center``) with Dirichlet
boundaries has eigenfunctions that are products of sines. Weighting them with
the kernel's spectral density gives a finite-rank surrogate of the kernel.
"""
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from kdgpsim.errors import InvalidArgumentError, OutOfDomainError

log = logging.getLogger(__name__)

DOMAIN_TOLERANCE = 1e-12

# alternative names accepted for SpectralForm values
SPECTRAL_FORM_ALIASES = {"paper": "three_halves"}


class SpectralForm(str, enum.Enum):
    """Which closed form of the 2-D spectral density to use."""

    THREE_HALVES = "three_halves"
    STANDARD_2D = "standard_2d"

    @classmethod
    def _missing_(cls, value):
        """Accept the names in :data:`SPECTRAL_FORM_ALIASES`."""
        if isinstance(value, str) and value in SPECTRAL_FORM_ALIASES:
            return cls(SPECTRAL_FORM_ALIASES[value])
        return None


class BasisSelection(str, enum.Enum):
    """How the E index pairs are chosen."""

    LOWEST = "lowest"
    GRID = "grid"


@dataclass(frozen=True)
class KernelHyperparams:
    """Hyperparameters of the squared-exponential kernel and the noise model."""

    sigma_s: float = 4.0
    length_scale: float = 0.05
    sigma_n: float = 0.5
    temporal_scale: float = 3600.0

    def __post_init__(self):
        """Reject non-positive hyperparameters."""
        for name in ("sigma_s", "length_scale", "sigma_n", "temporal_scale"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidArgumentError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class DomainEmbedding:
    """Centre and half-width L of the box enclosing an experiment domain."""

    center: tuple
    half_width: float

    @classmethod
    def from_bounds(cls, bounds, margin=1.2):
        """Embed ``(xmin, xmax, ymin, ymax)`` in a square box enlarged by ``margin``."""
        xmin, xmax, ymin, ymax = (float(b) for b in bounds)
        if xmax <= xmin or ymax <= ymin:
            raise InvalidArgumentError(f"degenerate domain {bounds!r}")
        if margin < 1.0:
            raise InvalidArgumentError(f"margin must be >= 1, got {margin!r}")
        center = (0.5 * (xmin + xmax), 0.5 * (ymin + ymax))
        half = 0.5 * max(xmax - xmin, ymax - ymin)
        return cls(center=center, half_width=half * margin)


@dataclass(frozen=True)
class BasisSet:
    """Index pairs, eigenvalues and spectral densities of E basis functions."""

    E: int
    L: float
    index_pairs: np.ndarray
    eigenvalues: np.ndarray
    spectral_densities: np.ndarray
    center: tuple = (0.0, 0.0)
    spectral_form: SpectralForm = field(default=SpectralForm.THREE_HALVES)

    def __post_init__(self):
        """Freeze the arrays so the basis stays immutable."""
        for name in ("index_pairs", "eigenvalues", "spectral_densities"):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)


def se_kernel(x, x_prime, hp):
    """Squared-exponential kernel ``sigma_s^2 exp(-|x - x'|^2 / (2 l^2))``."""
    diff = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    return float(hp.sigma_s**2 * np.exp(-np.dot(diff, diff) / (2.0 * hp.length_scale**2)))


def spectral_density(lambda_e, hp, form=SpectralForm.THREE_HALVES):
    """Spectral density of the SE kernel evaluated at eigenvalue(s) ``lambda_e``.

    ``three_halves`` uses ``sigma_s^2 (2 pi l)^(3/2) exp(-l^2 lambda / 2)``;
    ``standard_2d`` uses ``sigma_s^2 2 pi l^2 exp(-l^2 lambda / 2)``.
    """
    lam = np.asarray(lambda_e, dtype=float)
    if np.any(lam < 0):
        raise InvalidArgumentError("eigenvalues must be non-negative")
    form = SpectralForm(form)
    ell = hp.length_scale
    if form is SpectralForm.THREE_HALVES:
        scale = (2.0 * np.pi * ell) ** 1.5
    else:
        scale = 2.0 * np.pi * ell**2
    density = hp.sigma_s**2 * scale * np.exp(-(ell**2) * lam / 2.0)
    return float(density) if density.ndim == 0 else density


def _enumerate_pairs(E, selection):
    if selection is BasisSelection.GRID:
        side = int(round(np.sqrt(E)))
        if side * side != E:
            raise InvalidArgumentError(f"grid selection needs a perfect square, got E={E}")
        j1, j2 = np.meshgrid(np.arange(1, side + 1), np.arange(1, side + 1), indexing="ij")
    else:
        # the E smallest pairs never use an index above E
        j1, j2 = np.meshgrid(np.arange(1, E + 1), np.arange(1, E + 1), indexing="ij")
    j1 = j1.ravel()
    j2 = j2.ravel()
    order = np.lexsort((j2, j1, j1**2 + j2**2))[:E]
    return np.column_stack((j1[order], j2[order]))


def build_basis(
    E,
    L,
    hp,
    center=(0.0, 0.0),
    spectral_form=SpectralForm.THREE_HALVES,
    selection=BasisSelection.LOWEST,
):
    """Build the E lowest-frequency Laplacian eigenfunctions on ``[-L, L]^2``.

    Pairs are sorted by eigenvalue, ties broken lexicographically on ``(j1, j2)``.
    """
    if int(E) != E or E <= 0:
        raise InvalidArgumentError(f"E must be a positive integer, got {E!r}")
    if L <= 0:
        raise InvalidArgumentError(f"L must be positive, got {L!r}")
    E = int(E)
    pairs = _enumerate_pairs(E, BasisSelection(selection))
    eigenvalues = np.sum((np.pi * pairs / (2.0 * L)) ** 2, axis=1)
    densities = np.atleast_1d(spectral_density(eigenvalues, hp, spectral_form))
    log.debug("Built basis E=%d L=%.4g, largest eigenvalue %.4g", E, L, eigenvalues[-1])
    return BasisSet(
        E=E,
        L=float(L),
        index_pairs=pairs,
        eigenvalues=eigenvalues,
        spectral_densities=densities,
        center=tuple(float(c) for c in center),
        spectral_form=SpectralForm(spectral_form),
    )


def build_basis_for_domain(E, bounds, hp, margin=1.2, **kwargs):
    """Build a basis whose box encloses the rectangle ``bounds``."""
    embedding = DomainEmbedding.from_bounds(bounds, margin)
    return build_basis(E, embedding.half_width, hp, center=embedding.center, **kwargs)


def _centred(points, basis):
    pts = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(basis.center)
    if pts.shape[-1] != 2:
        raise InvalidArgumentError(f"points must be 2-D, got shape {pts.shape}")
    if np.any(np.abs(pts) > basis.L + DOMAIN_TOLERANCE):
        raise OutOfDomainError(f"point outside [-{basis.L}, {basis.L}]^2 around {basis.center}")
    return pts


def phi_matrix(points, basis):
    """Evaluate all eigenfunctions at each point; returns an ``(n, E)`` array."""
    pts = _centred(points, basis)
    L = basis.L
    args = np.pi * basis.index_pairs[None, :, :] * (pts[:, None, :] + L) / (2.0 * L)
    return np.prod(np.sin(args), axis=2) / L


def phi_vector(x, basis):
    """Vector of the E eigenfunctions evaluated at a single point."""
    return phi_matrix(x, basis)[0]


def eigenfunction(e, x, basis):
    """Evaluate eigenfunction ``e`` (0-based) at ``x``."""
    if not 0 <= e < basis.E:
        raise InvalidArgumentError(f"eigenfunction index {e} outside 0..{basis.E - 1}")
    pts = _centred(x, basis)[0]
    L = basis.L
    j = basis.index_pairs[e]
    return float(np.prod(np.sin(np.pi * j * (pts + L) / (2.0 * L))) / L)


def approx_gram(points, points_prime, basis):
    """Gram matrix of the reduced-rank kernel between two point sets."""
    phi = phi_matrix(points, basis)
    phi_prime = phi_matrix(points_prime, basis)
    return (phi * basis.spectral_densities) @ phi_prime.T


def approx_kernel(x, x_prime, basis):
    """Reduced-rank kernel ``sum_e S(lambda_e) phi_e(x) phi_e(x')``."""
    phi = phi_vector(x, basis)
    phi_prime = phi_vector(x_prime, basis)
    # elementwise product is commutative, so the value is exactly symmetric
    return float(np.sum(basis.spectral_densities * (phi * phi_prime)))
