"""Monte Carlo verification of sup-norm posterior contraction rates.

Three Bayesian nonparametric prior families on [0, 1] -- coordinate-wise
wavelet product priors in Gaussian white noise, log-density wavelet priors,
and Dirichlet random dyadic histograms -- together with loss-curve
experiments whose log-log slopes are compared against the minimax exponent
alpha / (2 alpha + 1).
"""

__version__ = "0.1.0"

from .grids import DyadicGrid, GridFunction
from .wavelets import (
    CoefficientTree,
    WaveletBasis,
    WaveletIndex,
    build_basis,
    daubechies_filter,
    eval_haar,
)
from .functions import (
    DensityTruthSpec,
    HolderTruthSpec,
    besov_norm,
    hellinger,
    l2_distance,
    make_density_truth,
    make_holder_truth,
    sup_distance,
)
from .whitenoise import (
    CoordPosterior,
    ProductPriorSpec,
    WhiteNoiseData,
    coord_posterior,
    draw_posterior_function,
    laplace_check,
    simulate_wn,
)
from .density import (
    HistogramPosterior,
    HistogramPriorSpec,
    LogDensityPriorSpec,
    McmcChain,
    McmcConfig,
    Sample,
    bin_counts,
    draw_histogram_posterior,
    histogram_posterior,
    log_likelihood,
    logdensity_mcmc,
    normalize_logdensity,
    posterior_expected_losses,
    sample_data,
)
from .rates import (
    ExperimentConfig,
    LossRecord,
    RateFit,
    cutoff,
    fit_rate,
    run_experiment,
    target_exponent,
)

__all__ = [
    "DyadicGrid", "GridFunction",
    "CoefficientTree", "WaveletBasis", "WaveletIndex", "build_basis",
    "daubechies_filter", "eval_haar",
    "DensityTruthSpec", "HolderTruthSpec", "besov_norm", "hellinger",
    "l2_distance", "make_density_truth", "make_holder_truth", "sup_distance",
    "CoordPosterior", "ProductPriorSpec", "WhiteNoiseData", "coord_posterior",
    "draw_posterior_function", "laplace_check", "simulate_wn",
    "HistogramPosterior", "HistogramPriorSpec", "LogDensityPriorSpec",
    "McmcChain", "McmcConfig", "Sample", "bin_counts",
    "draw_histogram_posterior", "histogram_posterior", "log_likelihood",
    "logdensity_mcmc", "normalize_logdensity", "posterior_expected_losses",
    "sample_data",
    "ExperimentConfig", "LossRecord", "RateFit", "cutoff", "fit_rate",
    "run_experiment", "target_exponent",
]
