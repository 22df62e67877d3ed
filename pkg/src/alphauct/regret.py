"""Regret laboratory: gap-dependent bounds, a martingale tail check, and
vectorized bandit simulations for the residual-variance policy family.

The headline quantity is the per-arm bound

    8 * sigma_res^2 * ln T / gap  +  16 * ln T / 3  +  2 * gap

summed over suboptimal arms: logarithmic in the horizon and scaled by the
*residual* variance left after value prediction, not the raw outcome
variance.  The simulated policy ("alpha") plays the empirical mean plus a
variance-scaled anytime radius sqrt(2 * sigma_res^2 * ln(1/delta_t) / n) with
delta_t = t^-4, the schedule whose index race pulls each suboptimal arm
about 8 * sigma_res^2 * ln T / gap^2 times -- the same constant the bound
carries; residual noise is bounded, hence sub-Gaussian with proxy
equal to its variance, so the radius is a valid confidence radius.  A
max-statistic variant ("alpha_max") with an untempered visit-ratio bonus is
kept for descriptive comparison, and classic UCB1 ("uct") as the baseline
whose radius scales with the full outcome spread.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .envs import BanditSpec
from .judging import TWO_POINT, UNIFORM
from .rng import derive_rng

ALGO_ALPHA = "alpha"
ALGO_UCT = "uct"
ALGO_ALPHA_MAX = "alpha_max"
ALGOS = (ALGO_ALPHA, ALGO_UCT, ALGO_ALPHA_MAX)


# -- closed-form pieces -------------------------------------------------------


def freedman_radius(n: int, sigma2: float, delta: float) -> float:
    """Bernstein-style confidence radius at sample size n:
    sqrt(2*sigma2*ln(1/delta)/n) + 2*ln(1/delta)/(3*n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    log_term = math.log(1.0 / delta)
    return math.sqrt(2.0 * sigma2 * log_term / n) + 2.0 * log_term / (3.0 * n)


@dataclass(frozen=True)
class PerArmBound:
    gap: float
    sigma_res2: float
    var_term: float  # 8*sigma^2*lnT/gap
    log_term: float  # 16*lnT/3
    gap_term: float  # 2*gap

    @property
    def total(self) -> float:
        return self.var_term + self.log_term + self.gap_term


@dataclass(frozen=True)
class BoundReport:
    horizon: int
    arms: tuple[PerArmBound, ...]

    @property
    def total(self) -> float:
        return sum(a.total for a in self.arms)


def theorem1_bound(gaps: Iterable[float], sigma_res2,
                   horizon: int) -> BoundReport:
    """Gap-dependent cumulative-regret bound over the suboptimal arms.

    ``sigma_res2`` may be a scalar (shared) or a per-gap sequence.
    """
    gaps = tuple(float(g) for g in gaps)
    if any(g <= 0 for g in gaps):
        raise ValueError("gaps must be positive (suboptimal arms only)")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if isinstance(sigma_res2, (int, float)):
        sig = tuple(float(sigma_res2) for _ in gaps)
    else:
        sig = tuple(float(s) for s in sigma_res2)
        if len(sig) != len(gaps):
            raise ValueError("need one sigma_res2 per gap")
    if any(s < 0 for s in sig):
        raise ValueError("sigma_res2 must be >= 0")
    log_t = math.log(horizon)
    arms = tuple(
        PerArmBound(gap=g, sigma_res2=s,
                    var_term=8.0 * s * log_t / g,
                    log_term=16.0 * log_t / 3.0,
                    gap_term=2.0 * g)
        for g, s in zip(gaps, sig))
    return BoundReport(horizon=horizon, arms=arms)


def bound_for_spec(spec: BanditSpec, horizon: int) -> BoundReport:
    return theorem1_bound(spec.gaps, spec.residual_var, horizon)


# -- martingale tail check ----------------------------------------------------


@dataclass(frozen=True)
class MdsSpec:
    """Bounded martingale-difference generator.

    ``rademacher``: d = +-scale.  ``uniform``: d ~ U[-a, a] with a chosen so
    the conditional variance is scale^2.  ``state_scaled``: a predictable
    two-regime walk - the next step uses ``scale_hi`` while the running sum
    is negative, ``scale`` otherwise, so the quadratic variation V_n varies
    across trials.
    """

    kind: str = "rademacher"
    scale: float = 0.1
    scale_hi: float | None = None

    def __post_init__(self):
        if self.kind not in ("rademacher", "uniform", "state_scaled"):
            raise ValueError(f"unknown mds kind {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if self.kind == "state_scaled" and (self.scale_hi is None
                                            or self.scale_hi <= 0):
            raise ValueError("state_scaled needs scale_hi > 0")


@dataclass(frozen=True)
class FreedmanCell:
    epsilon: float
    v_cap: float
    n: int
    trials: int
    rate: float
    bound: float

    @property
    def binom_std(self) -> float:
        return math.sqrt(self.bound * (1.0 - self.bound) / self.trials)


def freedman_tail_bound(epsilon: float, v_cap: float) -> float:
    """exp(-eps^2 / (2*v + 2*eps/3)) for the event {S_n >= eps, V_n <= v}."""
    if epsilon <= 0 or v_cap <= 0:
        raise ValueError("epsilon and v_cap must be > 0")
    return math.exp(-epsilon ** 2 / (2.0 * v_cap + 2.0 * epsilon / 3.0))


def freedman_empirical_check(mds: MdsSpec, n: int, epsilon: float,
                             v_cap: float, trials: int,
                             seed: int = 0) -> FreedmanCell:
    """Monte-Carlo hit rate of {S_n >= eps and V_n <= v} for the generator."""
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    rng = derive_rng(seed, "freedman", n)
    s = np.zeros(trials)
    v = np.zeros(trials)
    for _ in range(n):
        if mds.kind == "state_scaled":
            scale = np.where(s < 0.0, mds.scale_hi, mds.scale)
        else:
            scale = np.full(trials, mds.scale)
        if mds.kind == "uniform":
            half = scale * math.sqrt(3.0)
            d = half * (2.0 * rng.random(trials) - 1.0)
        else:
            d = scale * np.where(rng.random(trials) >= 0.5, 1.0, -1.0)
        s += d
        v += scale ** 2
    rate = float(np.mean((s >= epsilon) & (v <= v_cap)))
    return FreedmanCell(epsilon=epsilon, v_cap=v_cap, n=n, trials=trials,
                        rate=rate, bound=freedman_tail_bound(epsilon, v_cap))


# -- bandit simulation --------------------------------------------------------


@dataclass(frozen=True)
class RegretCurve:
    spec: BanditSpec
    algo: str
    horizon: int
    t_grid: tuple[int, ...]
    per_seed: np.ndarray  # (len(t_grid), n_seeds) cumulative pseudo-regret
    seed0: int
    c: float

    @property
    def n_seeds(self) -> int:
        return self.per_seed.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.per_seed.mean(axis=1)

    @property
    def std(self) -> np.ndarray:
        if self.n_seeds < 2:
            return np.zeros(len(self.t_grid))
        return self.per_seed.std(axis=1, ddof=1)

    @property
    def final(self) -> np.ndarray:
        """Per-seed cumulative regret at the horizon."""
        return self.per_seed[-1]


def default_grid(horizon: int, points: int = 512) -> tuple[int, ...]:
    """Geometrically spaced integer checkpoints, always ending at the horizon."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if points >= horizon:
        return tuple(range(1, horizon + 1))
    raw = np.geomspace(1.0, float(horizon), num=points)
    grid = np.unique(np.rint(raw).astype(np.int64))
    grid[0] = max(grid[0], 1)
    if grid[-1] != horizon:
        grid = np.append(grid, horizon)
    return tuple(int(t) for t in np.unique(grid))


def _noise_from_u(u: np.ndarray, s: float, kind: str) -> np.ndarray:
    if s == 0.0:
        return np.zeros_like(u)
    if kind == TWO_POINT:
        return np.where(u >= 0.5, s, -s)
    if kind == UNIFORM:
        return s * math.sqrt(3.0) * (2.0 * u - 1.0)
    raise ValueError(f"unknown noise kind {kind!r}")


def run_bandit_experiment(spec: BanditSpec, algo: str, horizon: int,
                          n_seeds: int, *, seed0: int = 0, c: float = 1.0,
                          grid: Sequence[int] | None = None,
                          block: int = 4096) -> RegretCurve:
    """Simulate ``n_seeds`` independent runs and record cumulative
    pseudo-regret at the grid checkpoints.

    Noise streams are per-seed (one uniform draw per step, whatever the arm),
    so a seed's trajectory is identical whether it runs alone, in any batch,
    or through the scalar reference implementation.
    """
    if algo not in ALGOS:
        raise ValueError(f"unknown algo {algo!r} (use one of {ALGOS})")
    if horizon < 1 or n_seeds < 1:
        raise ValueError("horizon and n_seeds must be >= 1")
    t_grid = tuple(grid) if grid is not None else default_grid(horizon)
    if not t_grid or list(t_grid) != sorted(set(t_grid)) or \
            t_grid[0] < 1 or t_grid[-1] > horizon:
        raise ValueError("grid must be sorted unique ints in [1, horizon]")

    kk = spec.k
    means = np.asarray(spec.means)
    gaps_all = means[spec.best_arm] - means
    s_res = math.sqrt(spec.residual_var)
    res8 = 8.0 * spec.residual_var  # 2 * sigma_res^2 * ln(1/delta_t), delta_t = t^-4

    counts = np.zeros((n_seeds, kk))
    sums = np.zeros((n_seeds, kk))
    qmax = np.tile(means, (n_seeds, 1)) if algo == ALGO_ALPHA_MAX else None
    reg = np.zeros(n_seeds)
    rows = np.arange(n_seeds)
    gens = [derive_rng(spec.seed, "pull-noise", sd)
            for sd in range(seed0, seed0 + n_seeds)]
    out = np.empty((len(t_grid), n_seeds))
    gi = 0

    with np.errstate(divide="ignore", invalid="ignore"):
        for t0 in range(0, horizon, block):
            bl = min(block, horizon - t0)
            u = np.empty((bl, n_seeds))
            for si, g in enumerate(gens):
                u[:, si] = g.random(bl)
            for b in range(bl):
                t = t0 + b + 1
                if algo == ALGO_ALPHA_MAX:
                    idx = qmax + c * np.sqrt((t - 1.0) / (counts + 1.0))
                else:
                    inv = 1.0 / np.maximum(counts, 1.0)
                    if algo == ALGO_ALPHA:
                        radius = np.sqrt(res8 * math.log(t) * inv)
                    else:
                        radius = c * np.sqrt(math.log(t) * inv)
                    idx = np.where(counts == 0.0, np.inf, sums * inv + radius)
                chosen = np.argmax(idx, axis=1)
                x = means[chosen] + _noise_from_u(u[b], s_res, spec.noise)
                sums[rows, chosen] += x
                counts[rows, chosen] += 1.0
                if qmax is not None:
                    picked = qmax[rows, chosen]
                    qmax[rows, chosen] = np.maximum(picked, x)
                reg += gaps_all[chosen]
                while gi < len(t_grid) and t_grid[gi] == t:
                    out[gi] = reg
                    gi += 1
    assert gi == len(t_grid)
    return RegretCurve(spec=spec, algo=algo, horizon=horizon, t_grid=t_grid,
                       per_seed=out, seed0=seed0, c=c)


def simulate_policy_scalar(spec: BanditSpec, algo: str, horizon: int,
                           seed: int, *, c: float = 1.0) -> np.ndarray:
    """Plain-python reference run (one seed): cumulative pseudo-regret at
    every step.  Differential twin of ``run_bandit_experiment``."""
    from .envs import bandit_pull

    if algo not in ALGOS:
        raise ValueError(f"unknown algo {algo!r}")
    rng = derive_rng(spec.seed, "pull-noise", seed)
    kk = spec.k
    counts = [0] * kk
    sums = [0.0] * kk
    qmax = list(spec.means)
    best = spec.means[spec.best_arm]
    reg = 0.0
    out = np.empty(horizon)
    for t in range(1, horizon + 1):
        best_arm, best_idx = 0, -math.inf
        for a in range(kk):
            if algo == ALGO_ALPHA_MAX:
                idx = qmax[a] + c * math.sqrt((t - 1.0) / (counts[a] + 1.0))
            elif counts[a] == 0:
                idx = math.inf
            elif algo == ALGO_ALPHA:
                idx = sums[a] / counts[a] + math.sqrt(
                    8.0 * spec.residual_var * math.log(t) / counts[a])
            else:
                idx = sums[a] / counts[a] + c * math.sqrt(
                    math.log(t) / counts[a])
            if idx > best_idx:
                best_arm, best_idx = a, idx
        _, x = bandit_pull(spec, best_arm, rng)
        sums[best_arm] += x
        counts[best_arm] += 1
        qmax[best_arm] = max(qmax[best_arm], x)
        reg += best - spec.means[best_arm]
        out[t - 1] = reg
    return out


# -- fits and ratios ----------------------------------------------------------


@dataclass(frozen=True)
class LogFit:
    slope: float
    intercept: float
    r_squared: float
    linear_r_squared: float
    log_model_preferred: bool
    n_points: int
    window: tuple[int, int]


def _r_squared(y: np.ndarray, pred: np.ndarray) -> float:
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot


def fit_log_regret(curve: RegretCurve, *, window_frac: float = 0.5) -> LogFit:
    """Least-squares fit of mean regret against ln t over the tail window
    [window_frac * horizon, horizon]; also fits a plain-linear model so the
    caller can see which shape explains the tail better."""
    if not 0.0 < window_frac < 1.0:
        raise ValueError("window_frac must be in (0, 1)")
    t = np.asarray(curve.t_grid, dtype=float)
    mask = t >= window_frac * curve.horizon
    if int(mask.sum()) < 3:
        raise ValueError("window holds fewer than 3 checkpoints")
    x = np.log(t[mask])
    y = curve.mean[mask]
    if float(np.ptp(y)) == 0.0:
        raise ValueError("degenerate (constant) regret curve in window")
    slope, intercept = np.polyfit(x, y, 1)
    r2 = _r_squared(y, slope * x + intercept)
    lin = np.polyfit(t[mask], y, 1)
    r2_lin = _r_squared(y, lin[0] * t[mask] + lin[1])
    return LogFit(slope=float(slope), intercept=float(intercept),
                  r_squared=float(r2), linear_r_squared=float(r2_lin),
                  log_model_preferred=bool(r2 >= r2_lin),
                  n_points=int(mask.sum()),
                  window=(int(t[mask][0]), int(t[mask][-1])))


def per_seed_log_slopes(curve: RegretCurve, *,
                        window_frac: float = 0.5) -> np.ndarray:
    """Tail ln-t slope of each seed's own curve.

    Least squares is linear in the ordinates, so the mean of this array is
    exactly ``fit_log_regret(curve).slope``; bootstrapping the mean-curve
    slope therefore reduces to resampling this array, with no refitting.
    """
    if not 0.0 < window_frac < 1.0:
        raise ValueError("window_frac must be in (0, 1)")
    t = np.asarray(curve.t_grid, dtype=float)
    mask = t >= window_frac * curve.horizon
    if int(mask.sum()) < 3:
        raise ValueError("window holds fewer than 3 checkpoints")
    x = np.log(t[mask])
    xc = x - x.mean()
    return (xc @ curve.per_seed[mask]) / float(xc @ x)


@dataclass(frozen=True)
class SlopeRatio:
    ratio: float
    ci_lo: float
    ci_hi: float
    n_seeds: int


def slope_ratio_ci(num: RegretCurve, den: RegretCurve, *, n_boot: int = 2000,
                   boot_seed: int = 0,
                   window_frac: float = 0.5) -> SlopeRatio:
    """Ratio of fitted tail slopes with a percentile bootstrap CI over seeds
    (independent resamples for numerator and denominator)."""
    sn = per_seed_log_slopes(num, window_frac=window_frac)
    sd = per_seed_log_slopes(den, window_frac=window_frac)
    rng = derive_rng(boot_seed, "slope-boot")
    ni = rng.integers(0, len(sn), size=(n_boot, len(sn)))
    di = rng.integers(0, len(sd), size=(n_boot, len(sd)))
    boots = sn[ni].mean(axis=1) / sd[di].mean(axis=1)
    return SlopeRatio(ratio=float(sn.mean() / sd.mean()),
                      ci_lo=float(np.percentile(boots, 2.5)),
                      ci_hi=float(np.percentile(boots, 97.5)),
                      n_seeds=len(sn))


@dataclass(frozen=True)
class RatioPoint:
    rho: float
    ratio: float
    ci_lo: float
    ci_hi: float
    mean_regret: float
    base_mean_regret: float
    n_seeds: int


def efficiency_ratio_experiment(spec: BanditSpec, rho_grid: Sequence[float],
                                horizon: int, n_seeds: int, *, seed0: int = 0,
                                n_boot: int = 2000,
                                boot_seed: int = 0) -> list[RatioPoint]:
    """Final-regret ratio of the residual-variance policy at each rho against
    the blind (rho = 1) baseline of the same family.

    The rho = 1 grid entry reuses the baseline runs seed-for-seed, so its
    ratio is exactly 1 by construction.  CIs are independent percentile
    bootstraps over seeds.
    """
    base_spec = replace(spec, rho=1.0)
    base = run_bandit_experiment(base_spec, ALGO_ALPHA, horizon, n_seeds,
                                 seed0=seed0)
    base_final = base.final
    base_mean = float(base_final.mean())
    points = []
    for rho in rho_grid:
        if not 0.0 <= rho <= 1.0:
            raise ValueError("rho grid entries must be in [0, 1]")
        if rho == 1.0:
            final = base_final
        else:
            cur = run_bandit_experiment(replace(spec, rho=rho), ALGO_ALPHA,
                                        horizon, n_seeds, seed0=seed0)
            final = cur.final
        ratio = float(final.mean()) / base_mean
        if rho == 1.0:
            lo = hi = 1.0
        else:
            rngb = derive_rng(boot_seed, "ratio-boot", int(round(rho * 1e6)))
            num_idx = rngb.integers(0, n_seeds, size=(n_boot, n_seeds))
            den_idx = rngb.integers(0, n_seeds, size=(n_boot, n_seeds))
            boots = final[num_idx].mean(axis=1) / base_final[den_idx].mean(axis=1)
            lo, hi = (float(np.percentile(boots, 2.5)),
                      float(np.percentile(boots, 97.5)))
        points.append(RatioPoint(rho=float(rho), ratio=ratio, ci_lo=lo,
                                 ci_hi=hi, mean_regret=float(final.mean()),
                                 base_mean_regret=base_mean, n_seeds=n_seeds))
    return points
