"""One-dimensional reference measures nu = exp(-V) dx on an interval.

A ReferenceMeasure carries the potential V analytically (value and two
derivatives) and realizes everything distributional numerically:
normalization, cdf, quantile, sampling.  Conventions:

* V is supplied up to an additive constant; log Z is computed once at
  construction so that pdf(x) = exp(-V(x) - log Z) integrates to 1 over
  the (truncated) support.
* Measures with unbounded mathematical support are truncated at their
  1e-14 quantiles.  Downstream entropy / Fisher / transport integrals
  converge far inside this window.  The truncation is an approximation
  artifact and is flagged where it matters (lyapunov_exponent).
* Cumulative tables use composite Simpson on a refined piecewise-uniform
  grid, segmented at potential kinks, accumulated separately from the
  left and from the right so both tails keep relative accuracy.

Preset families: gaussian, laplace_smoothed, logistic, interp_curvature
(a smooth monotone switch of V'' between two constants, so the
curvature limits at +-infinity exist by construction), and custom
potential tables.
"""

import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtr, ndtri

from .errors import ContractError, DomainError, NumericError
from .gridtools import cumulative_table, segmented_grid

DEFAULT_GRID_NODES = 4096
# cdf/quantile tables are refined by this factor over the base grid
CDF_REFINE = 4

# |1e-14 quantile| of the standard normal
_Z_TAIL = float(-ndtri(1e-14))
# |1e-14 quantile| of the unit Laplace law: F(x) = exp(x)/2 for x < 0
_LAPLACE_TAIL = -math.log(2e-14)
# |1e-14 quantile| of the unit logistic law
_LOGISTIC_TAIL = math.log((1.0 - 1e-14) / 1e-14)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(u):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(u))


class LyapunovExponent(float):
    """Essential supremum of squared distance to a base point.

    Plain float subclass with an `effectively_infinite` flag: for
    truncated representations of measures whose mathematical support is
    unbounded, the finite value is a truncation artifact.
    """

    def __new__(cls, value, effectively_infinite):
        obj = super().__new__(cls, value)
        obj.effectively_infinite = bool(effectively_infinite)
        return obj


class ReferenceMeasure:
    """Log-concave (usually) reference measure on a closed interval.

    Immutable after construction; all methods are pure and reentrant.
    """

    def __init__(
        self,
        family,
        params,
        potential,
        potential_d1,
        potential_d2,
        support,
        grid_nodes=DEFAULT_GRID_NODES,
        breakpoints=(),
        declared_log_concave=True,
        unbounded_mathematical_support=True,
    ):
        if grid_nodes < 16:
            raise ContractError("grid_nodes must be at least 16")
        lo, hi = float(support[0]), float(support[1])
        if not lo < hi:
            raise ContractError("support must be a nondegenerate interval")
        self.family = family
        self.params = dict(params)
        self.potential = potential
        self.potential_d1 = potential_d1
        self.potential_d2 = potential_d2
        self.support = (lo, hi)
        self.grid_nodes = int(grid_nodes)
        self.breakpoints = tuple(breakpoints)
        self.declared_log_concave = bool(declared_log_concave)
        self.unbounded_mathematical_support = bool(unbounded_mathematical_support)

        self.nodes = np.linspace(lo, hi, self.grid_nodes)
        self._build_tables()
        self.pdf_vals = np.exp(-self.potential(self.nodes) - self.log_normalizer)
        for arr in (self.nodes, self.pdf_vals):
            arr.setflags(write=False)

    # ------------------------------------------------------------------
    # construction internals

    def _build_tables(self):
        lo, hi = self.support
        fine, seg_starts = segmented_grid(
            lo, hi, self.breakpoints, CDF_REFINE * self.grid_nodes
        )
        v = np.asarray(self.potential(fine), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ContractError("potential is not finite on the support")
        self._v_shift = float(v.min())
        w = np.exp(-(v - self._v_shift))
        cum = cumulative_table(fine, w, seg_starts)
        surv = _reverse_cumulative(fine, w, seg_starts)
        total = float(cum[-1])
        if total <= 0.0 or not math.isfinite(total):
            raise NumericError("normalization integral is degenerate")
        self._fine = fine
        self._w = w
        self._cum = cum
        self._surv = surv
        self._total = total
        # log Z with the stability shift undone
        self.log_normalizer = math.log(total) - self._v_shift

    def _weight(self, x):
        """exp(-(V - V_shift)), the integrand of the cumulative tables."""
        return np.exp(-(np.asarray(self.potential(x), dtype=float) - self._v_shift))

    def _local_integral(self, a, b):
        """2-point Gauss-Legendre of the shifted weight over [a, b]."""
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        off = half / math.sqrt(3.0)
        return half * (self._weight(mid - off) + self._weight(mid + off))

    # ------------------------------------------------------------------
    # pointwise density

    def _check_in_support(self, x, what):
        lo, hi = self.support
        x = np.asarray(x, dtype=float)
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError(f"{what}: point outside support [{lo:g}, {hi:g}]")
        return x

    def logpdf(self, x):
        x = self._check_in_support(x, "logpdf")
        return -np.asarray(self.potential(x), dtype=float) - self.log_normalizer

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    # ------------------------------------------------------------------
    # distribution function and inverse

    def _cum_at(self, x):
        """Left cumulative of the shifted weight at x (array in, array out)."""
        j = np.clip(np.searchsorted(self._fine, x) - 1, 0, len(self._fine) - 2)
        return self._cum[j] + self._local_integral(self._fine[j], x)

    def _surv_at(self, x):
        j = np.clip(np.searchsorted(self._fine, x), 1, len(self._fine) - 1)
        return self._surv[j] + self._local_integral(x, self._fine[j])

    def cdf(self, x):
        """nu((-inf, x]) by quadrature of the pdf from the left edge."""
        x = self._check_in_support(x, "cdf")
        scalar = np.ndim(x) == 0
        xv = np.atleast_1d(np.asarray(x, dtype=float))
        left = self._cum_at(xv) / self._total
        right = 1.0 - self._surv_at(xv) / self._total
        out = np.where(left <= 0.5, left, right)
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def quantile(self, a):
        """Inverse cdf on (0,1), bracketed safeguarded Newton per query."""
        scalar = np.ndim(a) == 0
        av = np.atleast_1d(np.asarray(a, dtype=float))
        if np.any(av <= 0.0) or np.any(av >= 1.0):
            raise DomainError("quantile: probability must lie in the open (0,1)")
        out = np.empty_like(av)
        left = av <= 0.5
        if np.any(left):
            out[left] = self._invert(av[left] * self._total, from_right=False)
        if np.any(~left):
            out[~left] = self._invert((1.0 - av[~left]) * self._total, from_right=True)
        return float(out[0]) if scalar else out

    def _invert(self, targets, from_right):
        """Solve cum(x) = t (or surv(x) = t) inside its bracketing cell."""
        fine = self._fine
        table = self._surv if from_right else self._cum
        if from_right:
            # surv is decreasing; search on the reversed table
            j = len(fine) - 1 - np.searchsorted(table[::-1], targets, side="left")
            j = np.clip(j, 0, len(fine) - 2)
        else:
            j = np.clip(np.searchsorted(table, targets) - 1, 0, len(fine) - 2)
        lo = fine[j].copy()
        hi = fine[j + 1].copy()
        x = 0.5 * (lo + hi)
        tol = 1e-14 * targets
        for _ in range(90):
            if from_right:
                g = self._surv[j + 1] + self._local_integral(x, fine[j + 1]) - targets
                deriv = -self._weight(x)
            else:
                g = self._cum[j] + self._local_integral(fine[j], x) - targets
                deriv = self._weight(x)
            done = np.abs(g) <= tol
            if np.all(done):
                return x
            # maintain the bracket: g is increasing in x for the left table,
            # decreasing for the right table
            high_side = (g > 0) != from_right
            hi = np.where(high_side, np.minimum(hi, x), hi)
            lo = np.where(high_side, lo, np.maximum(lo, x))
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(deriv != 0.0, g / deriv, 0.0)
            cand = x - step
            bad = (cand <= lo) | (cand >= hi) | ~np.isfinite(cand)
            x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), cand))
        worst = int(np.argmax(np.abs(g) / np.maximum(tol, 1e-300)))
        raise NumericError(
            "quantile inversion did not converge; bracket "
            f"[{lo[worst]:.17g}, {hi[worst]:.17g}], residual {g[worst]:.3e}"
        )

    def sample(self, size, rng):
        """Inverse-cdf sampling; rng is a numpy Generator."""
        u = rng.uniform(1e-15, 1.0 - 1e-15, size=size)
        return self.quantile(u)

    # ------------------------------------------------------------------
    # scalar descriptors

    def kcd_constant(self, return_resolution=False):
        """Infimum of V'' over a dense grid (curvature lower bound).

        In one flat dimension this is the optimal constant of the
        curvature-dimension condition.  May be negative for inputs that
        are not log-concave.
        """
        vpp = np.asarray(self.potential_d2(self._fine), dtype=float)
        value = float(vpp.min())
        if return_resolution:
            return value, float(self._fine[1] - self._fine[0])
        return value

    def lyapunov_exponent(self, x0):
        """ess-sup of squared distance to x0 over the numeric support.

        Flagged `effectively_infinite` when the declared family has
        unbounded mathematical support, in which case the finite number
        only reflects the truncation window.
        """
        x0 = float(self._check_in_support(x0, "lyapunov_exponent"))
        lo, hi = self.support
        value = max((lo - x0) ** 2, (hi - x0) ** 2)
        return LyapunovExponent(value, self.unbounded_mathematical_support)

    def mass_defect(self):
        """|integral of pdf - 1| according to the internal quadrature."""
        total = self._cum_at(np.array([self.support[1]]))[0] / self._total
        return abs(float(total) - 1.0)

    def describe(self):
        lo, hi = self.support
        return {
            "family": self.family,
            "params": self.params,
            "support": [lo, hi],
            "grid_nodes": self.grid_nodes,
            "log_normalizer": self.log_normalizer,
            "kcd_constant": self.kcd_constant(),
            "declared_log_concave": self.declared_log_concave,
            "unbounded_mathematical_support": self.unbounded_mathematical_support,
        }

    def __repr__(self):
        lo, hi = self.support
        return (
            f"ReferenceMeasure({self.family}, {self.params}, "
            f"support=[{lo:g}, {hi:g}], nodes={self.grid_nodes})"
        )


def _reverse_cumulative(nodes, values, seg_starts):
    """S[i] = integral from nodes[i] to nodes[-1], Simpson order."""
    n = len(nodes)
    bounds = sorted({0, n - 1} | {n - 1 - s for s in seg_starts})
    mirrored_starts = bounds[:-1]
    rev = cumulative_table(-nodes[::-1], values[::-1], mirrored_starts)
    return rev[::-1].copy()


# ----------------------------------------------------------------------
# preset families


def gaussian(mean=0.0, variance=1.0, grid_nodes=DEFAULT_GRID_NODES, support=None):
    if variance <= 0:
        raise ContractError("gaussian: variance must be positive")
    mean = float(mean)
    var = float(variance)
    sd = math.sqrt(var)

    def v(x):
        return np.square(np.asarray(x, dtype=float) - mean) / (2.0 * var)

    def v1(x):
        return (np.asarray(x, dtype=float) - mean) / var

    def v2(x):
        return np.full_like(np.asarray(x, dtype=float), 1.0 / var)

    if support is None:
        support = (mean - _Z_TAIL * sd, mean + _Z_TAIL * sd)
    return ReferenceMeasure(
        "gaussian",
        {"mean": mean, "variance": var},
        v,
        v1,
        v2,
        support,
        grid_nodes=grid_nodes,
    )


def laplace_smoothed(scale=1.0, smoothing=0.0, grid_nodes=DEFAULT_GRID_NODES, support=None):
    """Laplace potential |x|/scale, optionally smoothed to
    sqrt(x^2 + smoothing^2)/scale so V is C^2 everywhere."""
    if scale <= 0:
        raise ContractError("laplace_smoothed: scale must be positive")
    if smoothing < 0:
        raise ContractError("laplace_smoothed: smoothing must be nonnegative")
    s = float(scale)
    eta = float(smoothing)

    if eta == 0.0:

        def v(x):
            return np.abs(np.asarray(x, dtype=float)) / s

        def v1(x):
            return np.sign(np.asarray(x, dtype=float)) / s

        def v2(x):
            return np.zeros_like(np.asarray(x, dtype=float))

        breakpoints = (0.0,)
    else:

        def v(x):
            return np.hypot(np.asarray(x, dtype=float), eta) / s

        def v1(x):
            x = np.asarray(x, dtype=float)
            return x / (s * np.hypot(x, eta))

        def v2(x):
            x = np.asarray(x, dtype=float)
            r = np.hypot(x, eta)
            return eta * eta / (s * r**3)

        breakpoints = ()

    if support is None:
        half = _LAPLACE_TAIL * s + eta
        support = (-half, half)
    return ReferenceMeasure(
        "laplace_smoothed",
        {"scale": s, "smoothing": eta},
        v,
        v1,
        v2,
        support,
        grid_nodes=grid_nodes,
        breakpoints=breakpoints,
    )


def logistic(scale=1.0, grid_nodes=DEFAULT_GRID_NODES, support=None):
    if scale <= 0:
        raise ContractError("logistic: scale must be positive")
    s = float(scale)

    def v(x):
        u = np.asarray(x, dtype=float) / s
        return u + 2.0 * np.logaddexp(0.0, -u)

    def v1(x):
        u = np.asarray(x, dtype=float) / s
        return np.tanh(0.5 * u) / s

    def v2(x):
        u = np.asarray(x, dtype=float) / s
        return 0.5 / (s * s * np.cosh(0.5 * u) ** 2)

    if support is None:
        half = _LOGISTIC_TAIL * s
        support = (-half, half)
    return ReferenceMeasure(
        "logistic", {"scale": s}, v, v1, v2, support, grid_nodes=grid_nodes
    )


def interp_curvature(
    k_left, k_right, width, grid_nodes=DEFAULT_GRID_NODES, support=None
):
    """Potential whose curvature switches smoothly from k_left (x -> -inf)
    to k_right (x -> +inf) over the given width.

    V''(x) = k_left + (k_right - k_left) * Phi(x / width) with Phi the
    standard normal cdf, integrated in closed form so that V'(0) = 0.
    Both curvature limits exist by construction.
    """
    if k_left <= 0 or k_right <= 0:
        raise ContractError("interp_curvature: curvatures must be positive")
    if width <= 0:
        raise ContractError("interp_curvature: width must be positive")
    kl, kr, w = float(k_left), float(k_right), float(width)
    dk = kr - kl

    def v2(x):
        u = np.asarray(x, dtype=float) / w
        return kl + dk * ndtr(u)

    def v1(x):
        x = np.asarray(x, dtype=float)
        u = x / w
        return kl * x + dk * w * (u * ndtr(u) + _phi(u) - _INV_SQRT_2PI)

    def v(x):
        x = np.asarray(x, dtype=float)
        u = x / w
        anti = 0.5 * (u * u + 1.0) * ndtr(u) + 0.5 * u * _phi(u) - 0.25
        return 0.5 * kl * x * x + dk * w * w * (anti - _INV_SQRT_2PI * u)

    if support is None:
        support = (-_Z_TAIL / math.sqrt(kl) - w, _Z_TAIL / math.sqrt(kr) + w)
    return ReferenceMeasure(
        "interp_curvature",
        {"k_left": kl, "k_right": kr, "width": w},
        v,
        v1,
        v2,
        support,
        grid_nodes=grid_nodes,
    )


def custom_table(x, v, grid_nodes=DEFAULT_GRID_NODES, support=None):
    """Potential given as a table, interpolated with a cubic spline.

    The support defaults to the table range.  Log-concavity is checked
    on the spline, not assumed.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.shape != v.shape or x.size < 4:
        raise ContractError("custom: need matching 1-D x and v tables, >= 4 points")
    if np.any(np.diff(x) <= 0):
        raise ContractError("custom: x table must be strictly increasing")
    spline = CubicSpline(x, v)
    d1 = spline.derivative(1)
    d2 = spline.derivative(2)
    if support is None:
        support = (float(x[0]), float(x[-1]))
    probe = np.linspace(support[0], support[1], 2048)
    log_concave = bool(np.min(d2(probe)) >= -1e-9)
    return ReferenceMeasure(
        "custom",
        {"x": x.tolist(), "v": v.tolist()},
        spline,
        d1,
        d2,
        support,
        grid_nodes=grid_nodes,
        declared_log_concave=log_concave,
        unbounded_mathematical_support=False,
    )


_FAMILY_BUILDERS = {
    "gaussian": (gaussian, {"mean", "variance"}),
    "laplace_smoothed": (laplace_smoothed, {"scale", "smoothing"}),
    "logistic": (logistic, {"scale"}),
    "interp_curvature": (interp_curvature, {"k_left", "k_right", "width"}),
    "custom": (custom_table, {"x", "v"}),
}


def from_spec(spec):
    """Build a measure from a spec mapping.

    Layout: {"family": str, "params": {...}, "grid_nodes": int,
    "support": [lo, hi]}, the last two optional.  Unknown keys are
    rejected by name so typos do not silently change the run.
    """
    if not isinstance(spec, dict):
        raise ContractError("measure spec must be a mapping")
    allowed = {"family", "params", "grid_nodes", "support"}
    for key in spec:
        if key not in allowed:
            raise ContractError(f"measure spec: unknown key '{key}'")
    family = spec.get("family")
    if family not in _FAMILY_BUILDERS:
        known = ", ".join(sorted(_FAMILY_BUILDERS))
        raise ContractError(f"measure spec: unknown family '{family}' (known: {known})")
    builder, allowed_params = _FAMILY_BUILDERS[family]
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise ContractError("measure spec: params must be a mapping")
    for key in params:
        if key not in allowed_params:
            raise ContractError(f"measure spec: unknown param '{key}' for {family}")
    kwargs = dict(params)
    if "grid_nodes" in spec:
        kwargs["grid_nodes"] = int(spec["grid_nodes"])
    if "support" in spec:
        lo, hi = spec["support"]
        kwargs["support"] = (float(lo), float(hi))
    return builder(**kwargs)
