"""Experiment orchestration: loss curves over an n-grid and rate fitting.

For each (n, replication) cell a truth is generated from the replication
seed (the same function across the n-grid within a replication), data are
simulated, the model posterior is computed, and posterior-expected losses
are recorded.  Log-log regression of the mean loss against n / log n (the
regressor carrying the logarithmic factor of the minimax sup-norm rate)
gives the empirical contraction slope, compared to -alpha/(2 alpha + 1).
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grids import GridFunction
from .functions import DensityTruthSpec, HolderTruthSpec, make_density_truth, make_holder_truth
from .wavelets import WaveletBasis, build_basis, default_resolution
from . import density as dens
from . import whitenoise as wn

MODELS = ("white-noise", "density-histogram", "density-logdensity")

_TAG_TRUTH = 1
_TAG_DATA = 2
_TAG_DRAWS = 3


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def target_exponent(alpha: float) -> float:
    """Minimax sup-norm exponent alpha / (2 alpha + 1)."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return alpha / (2.0 * alpha + 1.0)


def cutoff(n: int, alpha: float) -> tuple[float, int]:
    """Bandwidth h_n = (n/log n)^{-1/(2 alpha + 1)} and L_n = floor(log2(1/h_n))."""
    if n < 3:
        raise ValueError("n must be >= 3")
    h = (n / np.log(n)) ** (-1.0 / (2.0 * alpha + 1.0))
    L = int(np.floor(np.log2(1.0 / h)))
    return float(h), L


@dataclass
class ExperimentConfig:
    model: str
    alpha: float
    n_grid: tuple
    radius: float = 1.0
    replications: int = 20
    draws: int = 200
    master_seed: int = 1
    grid_resolution: int | None = None
    basis_kind: str | None = None  # default: haar for white noise, smooth otherwise
    basis_order: int = 4
    truth_kind: str = "signed-coefficient"
    # white-noise priors
    prior_family: str = "uniform"
    bound: float = 2.0
    delta: float = 1.0
    # histogram prior
    dirichlet_alpha: float = 1.0
    # log-density prior
    coefficient_law: str = "gaussian"
    r: float = 0.5
    tau: float = 0.5
    prior_scale: float = 1.0
    mcmc: dens.McmcConfig = field(default_factory=dens.McmcConfig)
    threads: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        ns = tuple(int(v) for v in self.n_grid)
        if not ns or any(v < 3 for v in ns):
            raise ConfigError("n-grid entries must be >= 3")
        if list(ns) != sorted(set(ns)):
            raise ConfigError("n-grid must be strictly increasing")
        self.n_grid = ns
        if len(ns) < 3 or ns[-1] < 16 * ns[0]:
            warnings.warn(
                "n-grid smaller than 3 points spanning a factor 16; "
                "rate fits on this run will be refused or unreliable",
                stacklevel=2,
            )
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.replications < 5:
            warnings.warn("fewer than 5 replications per n", stacklevel=2)
        if self.draws < 1:
            raise ConfigError("draws must be >= 1")
        if self.model == "white-noise":
            if self.prior_family == "uniform" and self.bound <= self.radius:
                raise ConfigError(
                    f"uniform prior needs B > R (got B={self.bound}, R={self.radius})"
                )
            if self.prior_family == "exp-power" and self.delta <= 0:
                raise ConfigError("exp-power prior needs delta > 0")
            if self.prior_family not in ("uniform", "exp-power"):
                raise ConfigError(f"unknown prior family {self.prior_family!r}")
        if self.model == "density-histogram" and self.dirichlet_alpha <= 0:
            raise ConfigError("dirichlet alpha must be > 0")
        if self.model == "density-logdensity":
            if self.coefficient_law == "gaussian" and not 0 < self.r <= self.alpha - 0.25:
                raise ConfigError(
                    f"gaussian log-density prior requires 0 < r <= alpha - 1/4 "
                    f"(got r={self.r}, alpha={self.alpha})"
                )
            if self.coefficient_law not in ("gaussian",) + dens.LOG_LIPSCHITZ_LAWS:
                raise ConfigError(f"unknown coefficient law {self.coefficient_law!r}")
        if self.truth_kind not in ("signed-coefficient", "fixed-analytic"):
            raise ConfigError(f"unknown truth kind {self.truth_kind!r}")
        if isinstance(self.mcmc, dict):
            self.mcmc = dens.McmcConfig(**self.mcmc)

    @property
    def prior_label(self) -> str:
        if self.model == "white-noise":
            return self.prior_family
        if self.model == "density-histogram":
            return f"dirichlet({self.dirichlet_alpha:g})"
        return self.coefficient_law


CSV_HEADER = (
    "model,prior,alpha,n,rep,sup_loss,l2_loss,hellinger_loss,"
    "q90_sup,trunc_bias,seed,flag"
)


@dataclass(frozen=True)
class LossRecord:
    model: str
    prior: str
    alpha: float
    n: int
    rep: int
    sup_loss: float
    l2_loss: float
    hellinger_loss: float | None
    q90_sup: float
    trunc_bias: float | None
    seed: int
    flag: int = 0

    def to_csv_row(self) -> str:
        def f(v):
            return "" if v is None else repr(float(v))

        return (
            f"{self.model},{self.prior},{float(self.alpha)!r},{self.n},{self.rep},"
            f"{f(self.sup_loss)},{f(self.l2_loss)},{f(self.hellinger_loss)},"
            f"{f(self.q90_sup)},{f(self.trunc_bias)},{self.seed},{self.flag}"
        )


def write_records(path, records) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(r.to_csv_row() + "\n")


def read_records(path) -> list[LossRecord]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized loss-record CSV header")
    out = []
    for ln in lines[1:]:
        if not ln:
            continue
        parts = ln.split(",")
        if len(parts) != 12:
            raise ValueError(f"malformed CSV row: {ln!r}")
        out.append(
            LossRecord(
                model=parts[0],
                prior=parts[1],
                alpha=float(parts[2]),
                n=int(parts[3]),
                rep=int(parts[4]),
                sup_loss=float(parts[5]),
                l2_loss=float(parts[6]),
                hellinger_loss=float(parts[7]) if parts[7] else None,
                q90_sup=float(parts[8]),
                trunc_bias=float(parts[9]) if parts[9] else None,
                seed=int(parts[10]),
                flag=int(parts[11]),
            )
        )
    return out


def _derived_seed(master: int, tag: int, n: int, rep: int) -> int:
    ss = np.random.SeedSequence(master, spawn_key=(tag, n, rep))
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 63))


def _truth_seed(cfg: ExperimentConfig, rep: int) -> int:
    # truth depends on the replication only, so loss curves over the n-grid
    # track a fixed function per replication
    return _derived_seed(cfg.master_seed, _TAG_TRUTH, 0, rep)


def plan_basis(cfg: ExperimentConfig) -> WaveletBasis:
    """Basis deep enough for the largest prior cutoff plus truth margin."""
    _, L_top = cutoff(max(cfg.n_grid), cfg.alpha)
    if cfg.model == "white-noise":
        L_max = L_top + 2 + 2  # prior truncation L_n + 2, truth two levels deeper
        kind = cfg.basis_kind or "haar"
    elif cfg.model == "density-histogram":
        L_max = L_top + 2
        # Haar-built truths carry the exact dyadic alpha-modulus that drives
        # bin-approximation error; smooth truths are available via basis_kind
        kind = cfg.basis_kind or "haar"
    else:
        L_max = L_top + 2
        kind = cfg.basis_kind or "boundary-smooth"
    J = cfg.grid_resolution or default_resolution(L_max)
    return build_basis(kind, L_max, J, order=cfg.basis_order)


def _truth_for_rep(cfg: ExperimentConfig, basis: WaveletBasis, rep: int) -> GridFunction:
    spec = HolderTruthSpec(
        alpha=cfg.alpha,
        radius=cfg.radius,
        seed=_truth_seed(cfg, rep),
        kind=cfg.truth_kind,
    )
    if cfg.model == "white-noise":
        return make_holder_truth(spec, basis)
    f0, _ = make_density_truth(DensityTruthSpec(spec), basis)
    return f0


def _run_cell(cfg: ExperimentConfig, basis: WaveletBasis, f0: GridFunction,
              n: int, rep: int) -> LossRecord:
    data_seed = _derived_seed(cfg.master_seed, _TAG_DATA, n, rep)
    draw_seed = _derived_seed(cfg.master_seed, _TAG_DRAWS, n, rep)
    _, L_n = cutoff(n, cfg.alpha)

    if cfg.model == "white-noise":
        L_trunc = min(L_n + 2, basis.L_max)
        prior = wn.ProductPriorSpec(
            family=cfg.prior_family,
            alpha=cfg.alpha,
            truncation_level=L_trunc,
            bound=cfg.bound,
            delta=cfg.delta,
        )
        data = wn.simulate_wn(f0, n, basis, data_seed, truncation_level=L_trunc)
        flat = wn.draw_posterior_coefficients(data, prior, basis, cfg.draws, draw_seed)
        values = basis.synthesize_flat(flat)
        losses = dens.posterior_expected_losses(values, f0, densities=False)
        return LossRecord(
            cfg.model, cfg.prior_label, cfg.alpha, n, rep,
            losses.sup, losses.l2, None, losses.q90_sup,
            wn.truncation_bias_bound(prior), data_seed,
        )

    if cfg.model == "density-histogram":
        prior = dens.HistogramPriorSpec.flat(L_n, cfg.dirichlet_alpha)
        sample = dens.sample_data(f0, n, data_seed)
        post = dens.histogram_posterior(prior, dens.bin_counts(sample, L_n))
        values = dens.draw_histogram_values(post, cfg.draws, draw_seed, basis.grid)
        losses = dens.posterior_expected_losses(values, f0, densities=True)
        return LossRecord(
            cfg.model, cfg.prior_label, cfg.alpha, n, rep,
            losses.sup, losses.l2, losses.hellinger, losses.q90_sup,
            None, data_seed,
        )

    # density-logdensity
    prior = dens.LogDensityPriorSpec(
        law=cfg.coefficient_law,
        alpha=cfg.alpha,
        cutoff_level=min(L_n, basis.L_max),
        r=cfg.r,
        tau=cfg.tau,
        scale=cfg.prior_scale,
    )
    sample = dens.sample_data(f0, n, data_seed)
    chain = dens.logdensity_mcmc(prior, sample, basis, cfg.mcmc, draw_seed)
    values = chain.density_values(basis)
    losses = dens.posterior_expected_losses(values, f0, densities=True)
    return LossRecord(
        cfg.model, cfg.prior_label, cfg.alpha, n, rep,
        losses.sup, losses.l2, losses.hellinger, losses.q90_sup,
        None, data_seed, flag=0 if chain.converged else 1,
    )


def run_experiment(cfg: ExperimentConfig, basis: WaveletBasis | None = None) -> list[LossRecord]:
    """All (n, replication) cells, deterministic given (config, master seed).

    Cells are independent with derived seeds, so thread scheduling cannot
    change any record; records are returned in (n, rep) order.
    """
    basis = basis or plan_basis(cfg)
    truths = {rep: _truth_for_rep(cfg, basis, rep) for rep in range(cfg.replications)}
    cells = [(n, rep) for n in cfg.n_grid for rep in range(cfg.replications)]

    def work(cell):
        n, rep = cell
        return _run_cell(cfg, basis, truths[rep], n, rep)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(work, cells))
    else:
        records = [work(c) for c in cells]
    return records


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float
    r_squared: float
    regressor: str
    n_points: int
    excluded_rows: int
    target: float

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "target": self.target,
            "regressor": self.regressor,
            "n_points": self.n_points,
            "excluded_rows": self.excluded_rows,
        }


class InsufficientDataError(ValueError):
    """Fewer than 3 distinct n values available for the fit."""


def fit_rate(records, regressor: str = "nlogn", loss: str = "sup") -> RateFit:
    """OLS of log(mean loss at n) on log(n/log n) or log n.

    Mean over replications is taken before the log transform; flagged rows
    are excluded and counted.
    """
    if regressor not in ("nlogn", "n"):
        raise ValueError("regressor must be 'nlogn' or 'n'")
    records = list(records)
    excluded = sum(1 for r in records if r.flag)
    clean = [r for r in records if not r.flag]
    by_n: dict[int, list[float]] = {}
    alphas = set()
    for r in clean:
        val = getattr(r, f"{loss}_loss" if loss != "sup" else "sup_loss")
        by_n.setdefault(r.n, []).append(val)
        alphas.add(r.alpha)
    if len(by_n) < 3:
        raise InsufficientDataError(
            f"need >= 3 distinct n values, have {len(by_n)}"
        )
    ns = np.array(sorted(by_n))
    means = np.array([np.mean(by_n[n]) for n in ns])
    x = np.log(ns / np.log(ns)) if regressor == "nlogn" else np.log(ns)
    y = np.log(means)
    xbar = x.mean()
    sxx = ((x - xbar) ** 2).sum()
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = max(len(x) - 2, 1)
    stderr = float(np.sqrt((resid ** 2).sum() / dof / sxx))
    sst = ((y - y.mean()) ** 2).sum()
    r2 = float(1.0 - (resid ** 2).sum() / sst) if sst > 0 else 1.0
    alpha = alphas.pop() if len(alphas) == 1 else None
    target = -target_exponent(alpha) if alpha is not None else float("nan")
    return RateFit(
        slope=slope,
        intercept=intercept,
        stderr=stderr,
        r_squared=r2,
        regressor=regressor,
        n_points=len(ns),
        excluded_rows=excluded,
        target=target,
    )
