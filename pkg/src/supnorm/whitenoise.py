"""Gaussian white noise sequence model with coordinate-wise product priors.

Observations are noisy wavelet coefficients x_lk = f_lk + eps_lk / sqrt(n).
The product structure makes the posterior factorize across coordinates, so
each coordinate posterior is tabulated by quadrature on a theta grid:
density proportional to exp(-n (x - theta)^2 / 2) * phi(theta / sigma_l).

Priors are truncated at a cutoff level: coefficients above it are fixed to
zero (the deterministic sup-norm bound of the neglected tail is reported by
the experiment harness).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as gamma_fn

import numpy as np

from .grids import GridFunction
from .wavelets import WaveletBasis, CoefficientTree

QUADRATURE_POINTS = 4096
LIKELIHOOD_HALF_WIDTH = 8.0  # in units of 1/sqrt(n); mass outside < 1e-14


class PosteriorUnderflowError(RuntimeError):
    """Posterior mass underflows even on the full prior support."""


@dataclass(frozen=True)
class ProductPriorSpec:
    """Coordinate-wise prior: density phi(./sigma_l)/sigma_l per coefficient.

    family "uniform": phi = 1/(2B) on [-B, B], sigma_l = 2^{-l(1/2+alpha)}.
    family "exp-power": phi = c_delta exp(-|x|^{1+delta}),
    sigma_l = 2^{-l(1/2+alpha)} / (l+1)^mu with mu = 1/(1+delta).
    """

    family: str
    alpha: float
    truncation_level: int
    bound: float = 2.0
    delta: float = 1.0

    def __post_init__(self):
        if self.family not in ("uniform", "exp-power"):
            raise ValueError(f"unknown prior family {self.family!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.family == "uniform" and self.bound <= 0:
            raise ValueError("uniform prior needs bound B > 0")
        if self.family == "exp-power" and self.delta <= 0:
            raise ValueError("exp-power prior needs delta > 0")
        if self.truncation_level < 0:
            raise ValueError("truncation level must be >= 0")

    def sigma(self, level: int) -> float:
        s = 2.0 ** (-level * (0.5 + self.alpha))
        if self.family == "exp-power":
            s /= (level + 1.0) ** (1.0 / (1.0 + self.delta))
        return s

    def log_phi(self, u: np.ndarray) -> np.ndarray:
        """Log density of the standardized coefficient, up to a constant."""
        u = np.asarray(u, dtype=float)
        if self.family == "uniform":
            return np.where(np.abs(u) <= self.bound, 0.0, -np.inf)
        return -np.abs(u) ** (1.0 + self.delta)

    def standardized_radius(self) -> float:
        """Radius beyond which phi is numerically negligible."""
        if self.family == "uniform":
            return self.bound
        return 50.0 ** (1.0 / (1.0 + self.delta))

    def phi_normalization(self) -> float:
        if self.family == "uniform":
            return 1.0 / (2.0 * self.bound)
        d = 1.0 + self.delta
        return d / (2.0 * gamma_fn(1.0 / d))


@dataclass(frozen=True)
class WhiteNoiseData:
    """Observed coefficients up to the truncation level."""

    n: int
    scaling: float
    levels: tuple = field(repr=False)
    seed: int = 0

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1


def _coordinate_rng(seed: int, level: int, position: int) -> np.random.Generator:
    # level slot 0 is the scaling coordinate, wavelet level l lives at l + 1
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(level, position)))


def simulate_wn(
    f0: GridFunction,
    n: int,
    basis: WaveletBasis,
    seed: int,
    truncation_level: int | None = None,
    zero_noise: bool = False,
) -> WhiteNoiseData:
    """x_lk = <f0, psi_lk> + eps_lk / sqrt(n), independent across (l, k).

    One RNG stream per coordinate, derived from (seed, level, position), so
    the observation of a coordinate does not depend on the truncation level
    or on evaluation order.  `zero_noise` is a test hook.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    L = basis.L_max if truncation_level is None else min(truncation_level, basis.L_max)
    tree = basis.analyze(f0)
    scale = 0.0 if zero_noise else 1.0 / np.sqrt(n)

    def noise(level_slot, k):
        if zero_noise:
            return 0.0
        return float(_coordinate_rng(seed, level_slot, k).standard_normal())

    x0 = tree.scaling + scale * noise(0, 0)
    levels = []
    for l in range(L + 1):
        eps = np.array([noise(l + 1, k) for k in range(2 ** l)])
        levels.append(tree.levels[l] + scale * eps)
    return WhiteNoiseData(n=n, scaling=x0, levels=tuple(levels), seed=seed)


@dataclass(frozen=True)
class CoordPosterior:
    """Quadrature table of one coordinate posterior."""

    thetas: np.ndarray = field(repr=False)
    log_density: np.ndarray = field(repr=False)  # unnormalized
    pdf: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)
    mean: float

    def sample(self, uniforms: np.ndarray) -> np.ndarray:
        """Inverse-CDF draws with linear interpolation on the table."""
        return np.interp(uniforms, self.cdf, self.thetas)

    def expectation(self, fn) -> float:
        w = self.pdf
        return float(np.trapezoid(fn(self.thetas) * w, self.thetas))


def coord_posterior(
    x: float, level: int, prior: ProductPriorSpec, n: int
) -> CoordPosterior:
    """Tabulated posterior of one coefficient given observation x.

    The theta window is the likelihood interval x +- 8/sqrt(n) intersected
    with the prior's effective support; when that intersection is empty the
    full prior support is used instead.
    """
    sigma = prior.sigma(level)
    half = LIKELIHOOD_HALF_WIDTH / np.sqrt(n)
    radius = prior.standardized_radius() * sigma
    lo = max(-radius, x - half)
    hi = min(radius, x + half)
    if not lo < hi:
        lo, hi = -radius, radius
    thetas = np.linspace(lo, hi, QUADRATURE_POINTS)
    logd = -0.5 * n * (thetas - x) ** 2 + prior.log_phi(thetas / sigma)
    m = logd.max()
    if not np.isfinite(m):
        raise PosteriorUnderflowError(
            f"posterior mass underflows at level {level} (x={x!r})"
        )
    w = np.exp(logd - m)
    total = np.trapezoid(w, thetas)
    if total <= 0.0:
        raise PosteriorUnderflowError(
            f"posterior mass underflows at level {level} (x={x!r})"
        )
    pdf = w / total
    inc = 0.5 * (pdf[1:] + pdf[:-1]) * np.diff(thetas)
    cdf = np.concatenate([[0.0], np.cumsum(inc)])
    cdf /= cdf[-1]
    mean = float(np.trapezoid(thetas * pdf, thetas))
    return CoordPosterior(thetas, logd, pdf, cdf, mean)


def _coordinate_slots(data: WhiteNoiseData, prior: ProductPriorSpec):
    """(level_slot, position, level, x) for every modeled coordinate."""
    L = min(data.max_level, prior.truncation_level)
    yield 0, 0, 0, data.scaling  # scaling coordinate behaves like level 0
    for l in range(L + 1):
        for k in range(2 ** l):
            yield l + 1, k, l, float(data.levels[l][k])


def draw_posterior_coefficients(
    data: WhiteNoiseData,
    prior: ProductPriorSpec,
    basis: WaveletBasis,
    m: int,
    seed: int,
) -> np.ndarray:
    """m independent coefficient vectors (flat basis order) from the posterior."""
    if m < 1:
        raise ValueError("draw count m must be >= 1")
    flat = np.zeros((m, basis.dim))
    for slot, k, l, x in _coordinate_slots(data, prior):
        post = coord_posterior(x, l, prior, data.n)
        rng = _coordinate_rng(seed, slot, k)
        u = rng.uniform(size=m)
        col = 0 if slot == 0 else 1 + (2 ** l - 1) + k
        flat[:, col] = post.sample(u)
    return flat


def draw_posterior_function(
    data: WhiteNoiseData,
    prior: ProductPriorSpec,
    basis: WaveletBasis,
    m: int,
    seed: int,
) -> list[GridFunction]:
    """m posterior function draws, coordinates sampled by inverse CDF."""
    flat = draw_posterior_coefficients(data, prior, basis, m, seed)
    values = basis.synthesize_flat(flat)
    return [GridFunction(basis.grid, values[i]) for i in range(m)]


def laplace_check(
    data,
    prior: ProductPriorSpec,
    level: int,
    position: int,
    t: float,
) -> float:
    """E^pi[exp(t sqrt(n) (theta - x_lk)) | data], averaged over replications.

    `data` may be one WhiteNoiseData or a sequence of them; each term is a
    quadrature on the coordinate posterior.
    """
    if abs(t) > 3.0 + 1e-12:
        raise ValueError("|t| <= 3 required")
    datas = [data] if isinstance(data, WhiteNoiseData) else list(data)
    vals = []
    for d in datas:
        x = float(d.levels[level][position])
        post = coord_posterior(x, level, prior, d.n)
        root_n = np.sqrt(d.n)
        vals.append(post.expectation(lambda th: np.exp(t * root_n * (th - x))))
    return float(np.mean(vals))


def truncation_bias_bound(prior: ProductPriorSpec, radius_scale: float | None = None) -> float:
    """Deterministic sup-norm bound of the neglected prior tail.

    sum_{l > L} 2^{l/2} sigma_l, scaled by the coefficient bound (B for the
    uniform family, 1 for exp-power where coefficients are unbounded).  The
    exp-power sum is dominated by the same geometric series.
    """
    L = prior.truncation_level
    a = prior.alpha
    tail = 2.0 ** (-(L + 1) * a) / (1.0 - 2.0 ** (-a))
    if radius_scale is None:
        radius_scale = prior.bound if prior.family == "uniform" else 1.0
    return float(radius_scale * tail)


def coefficient_tree_from_draw(flat: np.ndarray, basis: WaveletBasis) -> CoefficientTree:
    return CoefficientTree.from_flat(flat, basis.L_max)
