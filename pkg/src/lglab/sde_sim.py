"""Stochastic simulation with multiplicative noise on both species.

Two one-step schemes are provided.  Milstein adds the Ito correction
(1/2)*sigma^2*x*(h*xi^2 - h) to Euler-Maruyama and reduces to the plain
Euler recursion bit-for-bit when the noise is off, but can step through
zero.  LogEuler discretizes the exact-diffusion log coordinates and is
strictly positivity-preserving, so it is the default for long horizons.

The comparison bundle simulates the four bracketing processes (stochastic
logistic upper/lower bounds for each species) with the same Gaussian
increments and the same one-step map as the system itself; with a common
scheme the bracketing inequalities hold exactly at every grid point, not
merely up to discretization error.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import PositivityViolation
from .model import ModelParams, _field_scalar
from .qualitative import STATIONARY, Region, stochastic_regime

MILSTEIN = "Milstein"
LOG_EULER = "LogEuler"

EXTINCTION_THRESHOLD = 1e-3
HIST_RANGE = 1.5  # histogram domain [0, 1.5]^2 plus overflow

_CHUNK = 4096  # steps of noise generated at a time in batch kernels


@dataclass(frozen=True)
class NoisePath:
    """Two independent standard-normal increment streams on a uniform grid."""

    seed: int
    h: float
    xi1: np.ndarray
    xi2: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.xi1)


@dataclass(frozen=True)
class SamplePath:
    times: np.ndarray
    states: np.ndarray
    scheme: str
    noise: NoisePath

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]


@dataclass(frozen=True)
class ComparisonBundle:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    x_upper: np.ndarray
    y_upper: np.ndarray
    x_lower: np.ndarray
    y_lower: np.ndarray


@dataclass(frozen=True)
class EnsembleStats:
    n_paths: int
    checkpoint_times: np.ndarray
    mean: np.ndarray       # (n_checkpoints, 2)
    variance: np.ndarray   # (n_checkpoints, 2)
    extinction_fraction_x: float
    extinction_fraction_y: float
    hist_counts: np.ndarray
    hist_edges: np.ndarray
    hist_overflow: int


@dataclass(frozen=True)
class StationaryReport:
    counts: np.ndarray
    edges: np.ndarray
    overflow: int
    l1_half_vs_half: float
    l1_cross_seed: float
    regime: str
    regime_warning: bool


@dataclass(frozen=True)
class HittingReport:
    times: np.ndarray
    mean: float
    median: float
    fraction_censored: float


def _component_rng(seed: int, component: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(component,))
    return np.random.Generator(np.random.PCG64(ss))


def make_noise(seed: int, h: float, n_steps: int) -> NoisePath:
    """Reproducible increments; the two streams never share draws."""
    xi1 = _component_rng(seed, 0).standard_normal(n_steps)
    xi2 = _component_rng(seed, 1).standard_normal(n_steps)
    return NoisePath(seed=seed, h=h, xi1=xi1, xi2=xi2)


def simulate_path(p: ModelParams, init, scheme: str, noise: NoisePath,
                  t_max: float | None = None,
                  shared_noise: bool = False) -> SamplePath:
    """One sample path on the noise grid.

    shared_noise drives the prey diffusion with the predator's increments
    (a published variant of the recursion); the default keeps the two
    Brownian motions independent.  Milstein raises PositivityViolation with
    the step index if a positive component steps to <= 0.
    """
    h = noise.h
    n = noise.n_steps if t_max is None else int(round(t_max / h))
    if n > noise.n_steps:
        raise ValueError("noise path shorter than requested horizon")
    x, y = float(init[0]), float(init[1])
    if x < 0 or y < 0:
        raise ValueError("initial state must lie in the closed quadrant")
    a, b, k1, k2, m = p.a, p.b, p.k1, p.k2, p.m
    s1, s2 = p.sigma1, p.sigma2
    sqh = math.sqrt(h)
    xi1 = noise.xi2 if shared_noise else noise.xi1
    xi2 = noise.xi2
    states = np.empty((n + 1, 2))
    states[0] = (x, y)

    if scheme == MILSTEIN:
        c1 = 0.5 * s1 * s1
        c2 = 0.5 * s2 * s2
        for k in range(n):
            v1, v2 = _field_scalar(a, b, k1, k2, m, x, y)
            g1 = xi1[k]
            g2 = xi2[k]
            xn = x + (v1 * h + s1 * x * sqh * g1 + c1 * x * (h * g1 * g1 - h))
            yn = y + (v2 * h + s2 * y * sqh * g2 + c2 * y * (h * g2 * g2 - h))
            if (xn <= 0.0 < x) or (yn <= 0.0 < y):
                raise PositivityViolation(
                    f"positivity lost at step {k + 1}", step_index=k + 1)
            x, y = xn, yn
            states[k + 1] = (x, y)
    elif scheme == LOG_EULER:
        d1 = 0.5 * s1 * s1
        d2 = 0.5 * s2 * s2
        for k in range(n):
            v1, v2 = _field_scalar(a, b, k1, k2, m, x, y)
            if x > 0.0:
                x = x * math.exp((v1 / x - d1) * h + s1 * sqh * xi1[k])
            if y > 0.0:
                y = y * math.exp((v2 / y - d2) * h + s2 * sqh * xi2[k])
            states[k + 1] = (x, y)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    times = np.arange(n + 1) * h
    return SamplePath(times=times, states=states, scheme=scheme, noise=noise)


def explicit_upper_prey(sigma1: float, x0: float, noise: NoisePath,
                        t_max: float | None = None
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form stochastic logistic bound for the prey.

    x_up(t) = phi(t) / (1/x0 + int_0^t phi(s) ds) with
    phi(t) = exp((1 - sigma1^2/2) t + sigma1 w1(t)); the integral is
    trapezoidal on the noise grid.
    """
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    h = noise.h
    n = noise.n_steps if t_max is None else int(round(t_max / h))
    t = np.arange(n + 1) * h
    w = np.concatenate([[0.0], math.sqrt(h) * np.cumsum(noise.xi1[:n])])
    phi = np.exp((1.0 - 0.5 * sigma1 ** 2) * t + sigma1 * w)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * h * (phi[:-1] + phi[1:]))])
    return t, phi / (1.0 / x0 + integral)


def comparison_bundle(p: ModelParams, init, noise: NoisePath,
                      t_max: float | None = None) -> ComparisonBundle:
    """System path plus its four stochastic logistic brackets, one noise.

    All six processes use the LogEuler one-step map: the map is increasing
    in the previous state and in the carrying capacity, and the bracket
    drifts dominate the system drifts termwise, so the orderings
    x_lower <= x <= x_upper and y_lower <= y <= y_upper propagate exactly
    from one grid point to the next.
    """
    h = noise.h
    n = noise.n_steps if t_max is None else int(round(t_max / h))
    x0, y0 = float(init[0]), float(init[1])
    if x0 <= 0 or y0 <= 0:
        raise ValueError("initial state must be strictly positive")
    a, b, k1, k2, m = p.a, p.b, p.k1, p.k2, p.m
    s1, s2 = p.sigma1, p.sigma2
    sqh = math.sqrt(h)
    d1 = 0.5 * s1 * s1
    d2 = 0.5 * s2 * s2

    x = np.empty(n + 1); y = np.empty(n + 1)
    xu = np.empty(n + 1); yu = np.empty(n + 1)
    xl = np.empty(n + 1); yl = np.empty(n + 1)
    x[0] = xu[0] = xl[0] = x0
    y[0] = yu[0] = yl[0] = y0

    cx = cxu = cxl = x0
    cy = cyu = cyl = y0
    for k in range(n):
        e1 = s1 * sqh * noise.xi1[k]
        e2 = s2 * sqh * noise.xi2[k]
        u = cx - m
        if u < 0.0:
            u = 0.0
        nx = cx * math.exp((1.0 - cx - a * cy * u / ((k1 + u) * cx) - d1) * h + e1)
        nxu = cxu * math.exp((1.0 - cxu - d1) * h + e1)
        nxl = cxl * math.exp((1.0 - cxl - a * cyu / k1 - d1) * h + e1)
        ny = cy * math.exp((b * (1.0 - cy / (k2 + u)) - d2) * h + e2)
        nyu = cyu * math.exp((b * (1.0 - cyu / (k2 + cxu)) - d2) * h + e2)
        nyl = cyl * math.exp((b * (1.0 - cyl / k2) - d2) * h + e2)
        cx, cy, cxu, cyu, cxl, cyl = nx, ny, nxu, nyu, nxl, nyl
        x[k + 1] = cx; y[k + 1] = cy
        xu[k + 1] = cxu; yu[k + 1] = cyu
        xl[k + 1] = cxl; yl[k + 1] = cyl

    times = np.arange(n + 1) * h
    return ComparisonBundle(times=times, x=x, y=y, x_upper=xu, y_upper=yu,
                            x_lower=xl, y_lower=yl)


def _batch_generators(seed0: int, n_paths: int):
    g1 = [_component_rng(seed0 + i, 0) for i in range(n_paths)]
    g2 = [_component_rng(seed0 + i, 1) for i in range(n_paths)]
    return g1, g2


def _draw_chunk(gens, size: int) -> np.ndarray:
    return np.stack([g.standard_normal(size) for g in gens], axis=1)


def n_workers() -> int:
    """Thread cap honored by ensemble runs (LG_LAB_THREADS, default 1)."""
    try:
        return max(1, int(os.environ.get("LG_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _step_batch(scheme, p, x, y, g1, g2, h, sqh, path_offset):
    a, b, k1, k2, m = p.a, p.b, p.k1, p.k2, p.m
    s1, s2 = p.sigma1, p.sigma2
    u = np.maximum(x - m, 0.0)
    v1 = x * (1.0 - x) - a * y * u / (k1 + u)
    v2 = b * y * (1.0 - y / (k2 + u))
    if scheme == MILSTEIN:
        xn = x + (v1 * h + s1 * x * sqh * g1
                  + 0.5 * s1 * s1 * x * (h * g1 * g1 - h))
        yn = y + (v2 * h + s2 * y * sqh * g2
                  + 0.5 * s2 * s2 * y * (h * g2 * g2 - h))
        bad = ((xn <= 0.0) & (x > 0.0)) | ((yn <= 0.0) & (y > 0.0))
        if bad.any():
            raise PositivityViolation(
                f"positivity lost on path {int(path_offset + np.argmax(bad))}")
        return xn, yn
    with np.errstate(divide="ignore", invalid="ignore"):
        xn = np.where(x > 0.0,
                      x * np.exp((v1 / np.where(x > 0, x, 1.0)
                                  - 0.5 * s1 * s1) * h + s1 * sqh * g1),
                      0.0)
        yn = np.where(y > 0.0,
                      y * np.exp((v2 / np.where(y > 0, y, 1.0)
                                  - 0.5 * s2 * s2) * h + s2 * sqh * g2),
                      0.0)
    return xn, yn


def ensemble(p: ModelParams, init, scheme: str, n_paths: int, seed0: int,
             t_max: float, checkpoints, h: float = 1e-2,
             burn_in: float = 0.0, bins: int = 50,
             hist_thin: int = 100) -> EnsembleStats:
    """Monte Carlo over paths seeded seed0 .. seed0 + n_paths - 1.

    Paths advance in lockstep so moments at each checkpoint are direct
    cross-path reductions; the histogram pools every hist_thin-th
    post-burn-in state of every path.  Noise is drawn per path from the
    same generators a single simulate_path run would use.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    n = int(round(t_max / h))
    sqh = math.sqrt(h)
    ck_times = np.asarray(checkpoints, dtype=float)
    ck_steps = {int(round(t / h)): i for i, t in enumerate(ck_times)}
    burn_step = int(round(burn_in / h))
    edges = np.linspace(0.0, HIST_RANGE, bins + 1)

    def run_block(lo, hi):
        """Simulate paths [lo, hi) in lockstep; return additive partials."""
        width = hi - lo
        x = np.full(width, float(init[0]))
        y = np.full(width, float(init[1]))
        g1, g2 = _batch_generators(seed0 + lo, width)
        s = np.zeros((len(ck_times), 2))
        sq = np.zeros((len(ck_times), 2))
        counts = np.zeros((bins, bins), dtype=np.int64)
        overflow = 0

        def record_hist(xv, yv):
            nonlocal overflow
            inside = (xv < HIST_RANGE) & (yv < HIST_RANGE)
            overflow += int((~inside).sum())
            if inside.any():
                w = HIST_RANGE / bins
                np.add.at(counts,
                          (np.floor(xv[inside] / w).astype(int),
                           np.floor(yv[inside] / w).astype(int)), 1)

        def record_ck(step):
            i = ck_steps.get(step)
            if i is not None:
                s[i] = (x.sum(), y.sum())
                sq[i] = ((x * x).sum(), (y * y).sum())

        record_ck(0)
        if burn_step == 0:
            record_hist(x, y)
        step = 0
        while step < n:
            span = min(_CHUNK, n - step)
            c1 = _draw_chunk(g1, span)
            c2 = _draw_chunk(g2, span)
            for j in range(span):
                x, y = _step_batch(scheme, p, x, y, c1[j], c2[j], h, sqh, lo)
                step += 1
                record_ck(step)
                if step >= burn_step and step % hist_thin == 0:
                    record_hist(x, y)
        ext = (int((x < EXTINCTION_THRESHOLD).sum()),
               int((y < EXTINCTION_THRESHOLD).sum()))
        return s, sq, counts, overflow, ext

    workers = min(n_workers(), n_paths)
    bounds = np.linspace(0, n_paths, workers + 1).astype(int)
    blocks = [(lo, hi) for lo, hi in zip(bounds, bounds[1:]) if hi > lo]
    if len(blocks) == 1:
        results = [run_block(*blocks[0])]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(lambda ab: run_block(*ab), blocks))

    s = sum(r[0] for r in results)
    sq = sum(r[1] for r in results)
    counts = sum(r[2] for r in results)
    overflow = sum(r[3] for r in results)
    ext_x = sum(r[4][0] for r in results) / n_paths
    ext_y = sum(r[4][1] for r in results) / n_paths
    mean = s / n_paths
    var = sq / n_paths - mean ** 2
    return EnsembleStats(n_paths=n_paths, checkpoint_times=ck_times,
                         mean=mean, variance=np.maximum(var, 0.0),
                         extinction_fraction_x=float(ext_x),
                         extinction_fraction_y=float(ext_y),
                         hist_counts=counts, hist_edges=edges,
                         hist_overflow=overflow)


def _histogram_from_path(states, bins):
    w = HIST_RANGE / bins
    xv, yv = states[:, 0], states[:, 1]
    inside = (xv < HIST_RANGE) & (yv < HIST_RANGE)
    counts = np.zeros((bins, bins), dtype=np.int64)
    hi = np.floor(xv[inside] / w).astype(int)
    hj = np.floor(yv[inside] / w).astype(int)
    np.add.at(counts, (hi, hj), 1)
    return counts, int((~inside).sum())


def _l1(c1, c2) -> float:
    p1 = c1 / max(1, c1.sum())
    p2 = c2 / max(1, c2.sum())
    return float(np.abs(p1 - p2).sum())


def stationary_histogram(p: ModelParams, scheme: str, seed: int,
                         burn_in: float, t_max: float, bins: int = 50,
                         h: float = 1e-2, init=(0.55, 0.6),
                         seed2: int | None = None) -> StationaryReport:
    """Empirical long-run distribution from one path, with two diagnostics.

    The first-half vs second-half L1 distance checks that time averages
    have settled; the distance between histograms from two different seeds
    checks that the limit does not depend on the realization.  If the
    parameters are outside the proven stationary regime the computation
    still runs but the report carries a warning flag.
    """
    if burn_in >= t_max:
        raise ValueError("burn_in must be smaller than t_max")
    regime = stochastic_regime(p)
    warning = regime.clause != STATIONARY

    def tail_states(s):
        n = int(round(t_max / h))
        noise = make_noise(s, h, n)
        path = simulate_path(p, init, scheme, noise)
        return path.states[int(round(burn_in / h)):]

    tail = tail_states(seed)
    counts, overflow = _histogram_from_path(tail, bins)
    half = len(tail) // 2
    c_a, _ = _histogram_from_path(tail[:half], bins)
    c_b, _ = _histogram_from_path(tail[half:], bins)
    tail2 = tail_states(seed + 1 if seed2 is None else seed2)
    c_other, _ = _histogram_from_path(tail2, bins)

    edges = np.linspace(0.0, HIST_RANGE, bins + 1)
    return StationaryReport(counts=counts, edges=edges, overflow=overflow,
                            l1_half_vs_half=_l1(c_a, c_b),
                            l1_cross_seed=_l1(counts, c_other),
                            regime=regime.clause, regime_warning=warning)


def hitting_time(p: ModelParams, scheme: str, init, target: Region,
                 n_paths: int, seed0: int, t_cap: float,
                 h: float = 1e-2) -> HittingReport:
    """First grid time each path enters the target rectangle.

    Paths that never enter before t_cap contribute t_cap (censored).
    """
    n = int(round(t_cap / h))
    sqh = math.sqrt(h)
    x = np.full(n_paths, float(init[0]))
    y = np.full(n_paths, float(init[1]))
    g1, g2 = _batch_generators(seed0, n_paths)
    hit = np.full(n_paths, np.nan)

    def mark(step):
        inside = ((target.x_lo <= x) & (x <= target.x_hi)
                  & (target.y_lo <= y) & (y < target.y_hi))
        fresh = inside & np.isnan(hit)
        hit[fresh] = step * h

    mark(0)
    step = 0
    while step < n and np.isnan(hit).any():
        span = min(_CHUNK, n - step)
        c1 = _draw_chunk(g1, span)
        c2 = _draw_chunk(g2, span)
        for j in range(span):
            x, y = _step_batch(scheme, p, x, y, c1[j], c2[j], h, sqh, 0)
            step += 1
            mark(step)
            if not np.isnan(hit).any():
                break

    censored = np.isnan(hit)
    times = np.where(censored, t_cap, hit)
    return HittingReport(times=times, mean=float(times.mean()),
                         median=float(np.median(times)),
                         fraction_censored=float(censored.mean()))


def write_path_csv(bundle_or_path, fileobj) -> None:
    """CSV with `t,x,y` and, for bundles, the four comparison columns."""
    if isinstance(bundle_or_path, ComparisonBundle):
        b = bundle_or_path
        fileobj.write("t,x,y,x_upper,y_upper,x_lower,y_lower\n")
        for row in zip(b.times, b.x, b.y, b.x_upper, b.y_upper,
                       b.x_lower, b.y_lower):
            fileobj.write(",".join(f"{v:.17g}" for v in row) + "\n")
    else:
        path = bundle_or_path
        fileobj.write("t,x,y\n")
        for t, (xv, yv) in zip(path.times, path.states):
            fileobj.write(f"{t:.17g},{xv:.17g},{yv:.17g}\n")
