"""Grid-discretized relative densities rho = d(mu)/d(nu) and their
entropy / Fisher / Renyi functionals.

A GridDensity lives on the uniform base grid of its reference measure
and is normalized to unit mass under nu at construction; the
functionals assume that normalization and never re-normalize.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, DomainError, UnreliableResultWarning
from .gridtools import write_csv
from .measures import ReferenceMeasure

# nodes where rho is below this are excluded from the Fisher quadrature
FISHER_POSITIVITY_THRESHOLD = 1e-12
# flag the Fisher value when more than this nu-mass is masked out
FISHER_MASKED_MASS_LIMIT = 0.01


@dataclass(eq=False)
class GridDensity:
    """Relative density on the measure's uniform grid, unit nu-mass."""

    measure: ReferenceMeasure
    rho: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != self.measure.nodes.shape:
            raise DomainError("rho must be sampled on the measure's grid")
        if np.any(~np.isfinite(rho)) or np.any(rho < 0):
            raise DomainError("rho must be finite and nonnegative")
        mass = float(np.trapezoid(rho * self.measure.pdf_vals, self.measure.nodes))
        if mass <= 0.0:
            raise DegenerateInputError("density has zero mass under nu")
        rho = rho / mass
        rho.setflags(write=False)
        self.rho = rho

    @property
    def nodes(self):
        return self.measure.nodes

    def nu_mass(self):
        return float(np.trapezoid(self.rho * self.measure.pdf_vals, self.nodes))

    def mu_pdf(self):
        """Density of mu with respect to Lebesgue on the grid."""
        return self.rho * self.measure.pdf_vals


def from_function(measure, rho_fn):
    """Sample rho_fn on the grid and normalize under nu."""
    vals = np.asarray(rho_fn(measure.nodes), dtype=float)
    if vals.shape != measure.nodes.shape:
        vals = np.broadcast_to(vals, measure.nodes.shape).astype(float)
    if np.all(vals == 0.0):
        raise DegenerateInputError("rho_fn sampled to all zeros on the grid")
    return GridDensity(measure, vals)


def from_values(measure, values):
    return GridDensity(measure, np.asarray(values, dtype=float))


def uniform(measure):
    """The density of nu against itself, rho = 1."""
    return GridDensity(measure, np.ones_like(measure.nodes))


def gaussian_shift_density(measure, b, variance=1.0):
    """mu = N(b, variance) as a density relative to the given measure.

    rho(x) = exp(V(x) - (x-b)^2/(2 var)) up to normalization; works for
    any reference measure whose potential is evaluable on the support.
    """

    def ratio(x):
        v = np.asarray(measure.potential(x), dtype=float)
        expo = v - np.square(x - b) / (2.0 * variance)
        return np.exp(expo - expo.max())

    return from_function(measure, ratio)


def shifted_density(measure, b):
    """Pushforward of nu by x -> x + b, as a density relative to nu."""

    def ratio(x):
        expo = np.asarray(measure.potential(x), dtype=float) - np.asarray(
            measure.potential(x - b), dtype=float
        )
        return np.exp(expo - expo.max())

    return from_function(measure, ratio)


def scaled_density(measure, sigma):
    """Pushforward of nu by x -> sigma * x, as a density relative to nu."""
    if sigma <= 0:
        raise DomainError("scaled_density: sigma must be positive")

    def ratio(x):
        expo = np.asarray(measure.potential(x), dtype=float) - np.asarray(
            measure.potential(x / sigma), dtype=float
        )
        return np.exp(expo - expo.max())

    return from_function(measure, ratio)


# ----------------------------------------------------------------------
# functionals


def relative_entropy(d: GridDensity) -> float:
    """integral of rho log rho d(nu), with 0 log 0 = 0."""
    rho = d.rho
    integrand = np.where(rho > 0.0, rho * np.log(np.where(rho > 0.0, rho, 1.0)), 0.0)
    return float(np.trapezoid(integrand * d.measure.pdf_vals, d.nodes))


def fisher_information(d: GridDensity, return_flag=False):
    """integral of |grad rho|^2 / rho d(nu) over {rho > threshold}.

    Central differences with one-sided boundary stencils.  If more than
    1% of nu-mass sits where rho is below the positivity threshold the
    value is unreliable and a warning is issued.
    """
    rho = d.rho
    grad = np.gradient(rho, d.nodes)
    mask = rho > FISHER_POSITIVITY_THRESHOLD
    integrand = np.zeros_like(rho)
    integrand[mask] = grad[mask] ** 2 / rho[mask]
    value = float(np.trapezoid(integrand * d.measure.pdf_vals, d.nodes))
    masked_mass = float(
        np.trapezoid(np.where(mask, 0.0, 1.0) * d.measure.pdf_vals, d.nodes)
    )
    flagged = masked_mass > FISHER_MASKED_MASS_LIMIT
    if flagged:
        warnings.warn(
            f"fisher_information: {masked_mass:.1%} of nu-mass below the "
            "positivity threshold; value unreliable",
            UnreliableResultWarning,
            stacklevel=2,
        )
    if return_flag:
        return value, flagged
    return value


def renyi_divergence(d: GridDensity, order: float) -> float:
    """-(1/t) log integral rho^(1-t) d(nu) with t = 1 - order."""
    if not 0.0 < order < 1.0:
        raise DomainError("renyi_divergence: order must lie in (0,1)")
    t = 1.0 - order
    moment = float(np.trapezoid(d.rho ** (1.0 - t) * d.measure.pdf_vals, d.nodes))
    return -np.log(moment) / t


def export_csv(d: GridDensity, path, timestamp=True):
    """CSV of (node, rho, mu_pdf) triples for plotting."""
    mu = d.mu_pdf()
    rows = zip(d.nodes.tolist(), d.rho.tolist(), mu.tolist())
    write_csv(
        path,
        ["node", "rho", "mu_pdf"],
        rows,
        meta={"measure": d.measure.family},
        timestamp=timestamp,
    )
