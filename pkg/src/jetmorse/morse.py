"""Seeded Monte Carlo estimation of holomorphic Morse integrals.

Each sample draws a base point from the scenario's weighted samples and
independent uniform unit vectors on the fiber spheres, then forms the
base curvature form

    gamma = -r * S(u_1, ..., u_k) + W * (1 - delta) * theta_L,

where S is the metric family's curvature sampler and W its total trace
weight.  Since the sphere average of -r * gamma(u) is the curvature of
the dual determinant bundle, gamma is an unbiased per-sample estimate of
W * eta with eta = -trace_fiber(c) + (1 - delta) * theta_L; the estimator
value is indicator(q_mode, signature(gamma)) * det(gamma).  For the
``gg`` kind W is the harmonic number H_k and the zero-fiber-variance
limit of the estimate is exactly ``closed_form``.

Reproducibility contract: the sample stream is generated in fixed blocks
of ``BLOCK`` iterations.  Block b is driven by its own generator seeded
with ``numpy.random.SeedSequence(seed, spawn_key=(b,))`` (NumPy's
published splittable hashing scheme), and inside a block the draw order
is: base-sample uniforms, then real parts, then imaginary parts of the
fiber Gaussians (per symmetric power in ascending order for sympow).
Block results are merged in block order with numerically stable pooling,
so the result is bit-identical for any worker count; threads only
schedule whole blocks.  Thread count comes from the JETMORSE_THREADS
environment variable (0 = auto) unless passed explicitly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import lgamma, log

import numpy as np
from scipy.stats import t as student_t

from .errors import NumericalGuardError
from .geometry import EIGENVALUE_TOL, BaseScenario, eta_form, signature, top_power
from .metrics import (
    MetricKind,
    MetricSpec,
    harmonic,
    sampler_batch,
    sampler_batch_sympow,
    sampler_weight_total,
    sympow_orders,
)

__all__ = [
    "BLOCK",
    "QMode",
    "MorseEstimate",
    "Verdict",
    "ConvergenceReport",
    "DeltaScanResult",
    "prefactor",
    "sample_stream",
    "fiber_mc",
    "closed_form",
    "verdict",
    "growth_bound",
    "delta_scan",
    "convergence_diag",
]

# Fixed block length of the sample stream; part of the reproducibility
# contract, never derived from thread count.
BLOCK = 4096

FACTORIAL_GUARD = 170


@dataclass(frozen=True)
class QMode:
    """Morse index selector: exactly q or at most q negative eigenvalues.

    Eigenvalues within the signature tolerance count as zero; an
    ``exact`` indicator additionally requires that none occur.
    """

    kind: str
    q: int

    def __post_init__(self):
        if self.kind not in ("exact", "atmost"):
            raise ValueError(f"unknown q mode {self.kind!r}")
        if self.q < 0:
            raise ValueError("q must be nonnegative")

    @classmethod
    def exactly(cls, q: int) -> "QMode":
        return cls("exact", q)

    @classmethod
    def at_most(cls, q: int) -> "QMode":
        return cls("atmost", q)

    @classmethod
    def parse(cls, text: str) -> "QMode":
        kind, sep, value = text.partition(":")
        if not sep or kind not in ("exact", "atmost"):
            raise ValueError(f"q mode must look like 'exact:Q' or 'atmost:Q', got {text!r}")
        return cls(kind, int(value))

    def indicator(self, n_neg: int, n_zero: int) -> bool:
        if self.kind == "exact":
            return n_neg == self.q and n_zero == 0
        return n_neg <= self.q

    def __str__(self) -> str:
        return f"{self.kind}:{self.q}"


@dataclass(frozen=True)
class MorseEstimate:
    """Monte Carlo mean and standard error of one Morse integral."""

    q_mode: QMode
    mean: float
    stderr: float
    samples: int
    k: int
    n: int
    r: int
    metric_kind: MetricKind


@dataclass(frozen=True)
class Verdict:
    """Positivity decision at three standard errors, with the growth data."""

    estimate: MorseEstimate
    prefactor: float
    lower_bound: float
    positive: bool


@dataclass(frozen=True)
class ConvergenceReport:
    """Batch-means diagnostics for one estimator stream."""

    batch_means: np.ndarray
    grand_mean: float
    ci_half_width: float
    ratio: float
    converged: bool
    batches: int
    samples_used: int


@dataclass(frozen=True)
class DeltaScanResult:
    """Largest twist strength that keeps the verdict positive."""

    delta_star: float | None
    log_k_over_k: float
    results: tuple[tuple[float, Verdict], ...]


def prefactor(n: int, k: int, r: int) -> float:
    """Combinatorial growth constant (n+kr-1)! / (n! (k!)^r (kr-1)!) / (kr)^n."""
    if min(n, k, r) < 1:
        raise ValueError("n, k, r must all be >= 1")
    top = n + k * r - 1
    if top > FACTORIAL_GUARD:
        raise NumericalGuardError(f"n + k*r - 1 = {top} exceeds factorial guard {FACTORIAL_GUARD}")
    value = (
        lgamma(top + 1)
        - lgamma(n + 1)
        - r * lgamma(k + 1)
        - lgamma(k * r)
        - n * log(k * r)
    )
    return math.exp(value)


# ---------------------------------------------------------------------------
# Sample stream.

def _thread_count(threads: int | None) -> int:
    if threads is None:
        raw = os.environ.get("JETMORSE_THREADS", "1")
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ValueError(f"JETMORSE_THREADS must be an integer, got {raw!r}") from exc
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    if threads == 0:
        threads = min(os.cpu_count() or 1, 8)
    return threads


def _sympow_dims(spec: MetricSpec, r: int) -> list[int]:
    return [math.comb(r + s - 1, s) for s in sympow_orders(spec)]


def _block_values(
    spec: MetricSpec,
    scenario: BaseScenario,
    q_mode: QMode,
    seed: int,
    block_index: int,
    start: int,
    size: int,
    cumulative: np.ndarray,
    twist: np.ndarray,
    tensors: list,
) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block_index,)))
    n, r = scenario.n, scenario.r

    picks = rng.random(size)
    idx = np.searchsorted(cumulative, picks, side="right")
    idx = np.minimum(idx, len(scenario.samples) - 1)

    if spec.kind is MetricKind.SYMPOW:
        draws = []
        for dim in _sympow_dims(spec, r):
            re = rng.standard_normal((size, dim))
            im = rng.standard_normal((size, dim))
            u = re + 1j * im
            u /= np.linalg.norm(u, axis=-1, keepdims=True)
            draws.append(u)
    else:
        re = rng.standard_normal((size, spec.k, r))
        im = rng.standard_normal((size, spec.k, r))
        u = re + 1j * im
        u /= np.linalg.norm(u, axis=-1, keepdims=True)

    gamma = np.empty((size, n, n), dtype=complex)
    for which in np.unique(idx):
        mask = idx == which
        _, model = scenario.samples[which]
        if spec.kind is MetricKind.SYMPOW:
            fiber = sampler_batch_sympow(
                spec, model, [d[mask] for d in draws], tensors[which]
            )
        else:
            fiber = sampler_batch(spec, model, u[mask])
        gamma[mask] = -r * fiber + twist

    eigvals = np.linalg.eigvalsh(gamma)
    n_neg = np.sum(eigvals < -EIGENVALUE_TOL, axis=1)
    n_zero = np.sum(np.abs(eigvals) <= EIGENVALUE_TOL, axis=1)
    if q_mode.kind == "exact":
        indicator = (n_neg == q_mode.q) & (n_zero == 0)
    else:
        indicator = n_neg <= q_mode.q
    dets = np.linalg.det(gamma).real
    return np.where(indicator, dets, 0.0)


def sample_stream(
    spec: MetricSpec,
    scenario: BaseScenario,
    q_mode: QMode,
    n_samples: int,
    seed: int,
    threads: int | None = None,
) -> np.ndarray:
    """Raw estimator values, deterministic in (spec, scenario, samples, seed)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if q_mode.q > scenario.n:
        raise ValueError(f"q = {q_mode.q} exceeds the base dimension {scenario.n}")

    weights = np.array([w for w, _ in scenario.samples])
    cumulative = np.cumsum(weights)
    total = sampler_weight_total(spec)
    twist = total * (1.0 - scenario.delta) * scenario.theta_L.A
    if spec.kind is MetricKind.SYMPOW:
        from .geometry import sym_power_curvature

        tensors = [
            [sym_power_curvature(m, s).C for s in sympow_orders(spec)]
            for _, m in scenario.samples
        ]
    else:
        tensors = [None] * len(scenario.samples)

    blocks = []
    start = 0
    index = 0
    while start < n_samples:
        size = min(BLOCK, n_samples - start)
        blocks.append((index, start, size))
        index += 1
        start += size

    values = np.empty(n_samples)

    def run(block) -> None:
        b, s0, size = block
        values[s0 : s0 + size] = _block_values(
            spec, scenario, q_mode, seed, b, s0, size, cumulative, twist, tensors
        )

    workers = _thread_count(threads)
    if workers <= 1 or len(blocks) == 1:
        for block in blocks:
            run(block)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    return values


def _pooled_stats(values: np.ndarray) -> tuple[float, float]:
    """Mean and standard error by stable block pooling (Chan et al. merge)."""
    count = 0
    mean = 0.0
    m2 = 0.0
    for start in range(0, len(values), BLOCK):
        chunk = values[start : start + BLOCK]
        c = len(chunk)
        c_mean = float(chunk.mean())
        c_m2 = float(np.sum((chunk - c_mean) ** 2))
        delta = c_mean - mean
        total = count + c
        m2 += c_m2 + delta * delta * count * c / total
        mean += delta * c / total
        count = total
    if count < 2:
        return mean, 0.0
    variance = m2 / (count - 1)
    return mean, math.sqrt(variance / count)


def fiber_mc(
    spec: MetricSpec,
    scenario: BaseScenario,
    q_mode: QMode,
    n_samples: int,
    seed: int,
    threads: int | None = None,
) -> MorseEstimate:
    """Monte Carlo Morse estimate; bit-identical for identical inputs and seed."""
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    values = sample_stream(spec, scenario, q_mode, n_samples, seed, threads)
    mean, stderr = _pooled_stats(values)
    return MorseEstimate(
        q_mode=q_mode,
        mean=mean,
        stderr=stderr,
        samples=n_samples,
        k=spec.k,
        n=scenario.n,
        r=scenario.r,
        metric_kind=spec.kind,
    )


def closed_form(scenario: BaseScenario, k: int, q_mode: QMode) -> float:
    """Limit value H_k^n * sum_i w_i * indicator(signature(eta_i)) * det(eta_i).

    Exact for the scenario's discrete base measure; the ``gg`` sampler
    with zero fiber variance reproduces it exactly, sample by sample.
    """
    n = scenario.n
    total = 0.0
    for i, (w, _) in enumerate(scenario.samples):
        eta = eta_form(scenario, i)
        n_neg, n_zero, _ = signature(eta)
        if q_mode.indicator(n_neg, n_zero):
            total += w * top_power(eta)
    return harmonic(k) ** n * total


def verdict(estimate: MorseEstimate) -> Verdict:
    """Positivity at three standard errors plus the growth coefficient."""
    pf = prefactor(estimate.n, estimate.k, estimate.r)
    positive = estimate.mean - 3.0 * estimate.stderr > 0.0
    lower = pf * estimate.mean if positive else 0.0
    return Verdict(estimate, pf, lower, positive)


def growth_bound(v: Verdict, n: int, k: int, r: int) -> float:
    """Coefficient of the leading-order section growth implied by a verdict."""
    if v.estimate.q_mode != QMode.at_most(1):
        raise ValueError("growth bound requires a verdict computed with atmost:1")
    if (v.estimate.n, v.estimate.k, v.estimate.r) != (n, k, r):
        raise ValueError("verdict parameters do not match the requested (n, k, r)")
    if not v.positive:
        return 0.0
    return prefactor(n, k, r) * v.estimate.mean


def delta_scan(
    spec: MetricSpec,
    scenario: BaseScenario,
    grid,
    n_samples: int,
    seed: int,
    q_mode: QMode | None = None,
    threads: int | None = None,
) -> DeltaScanResult:
    """Largest grid twist with a positive verdict, plus log(k)/k for context.

    Every grid point reuses the same seed (common random numbers), so the
    scan varies only through the twist term.  The scenario's own delta is
    ignored in favor of the grid.
    """
    grid = [float(d) for d in grid]
    if grid != sorted(grid):
        raise ValueError("delta grid must be sorted ascending")
    if q_mode is None:
        q_mode = QMode.at_most(1)
    results = []
    best: float | None = None
    for d in grid:
        est = fiber_mc(spec, replace(scenario, delta=d), q_mode, n_samples, seed, threads)
        v = verdict(est)
        results.append((d, v))
        if v.positive:
            best = d
    return DeltaScanResult(best, log(spec.k) / spec.k, tuple(results))


def convergence_diag(
    spec: MetricSpec,
    scenario: BaseScenario,
    q_mode: QMode,
    n_samples: int,
    batches: int,
    seed: int,
    threads: int | None = None,
) -> ConvergenceReport:
    """Batch-means convergence check of the estimator stream.

    The stream is cut into ``batches`` equal batches (trailing remainder
    dropped); convergence means the Student-t 95% half-width of the grand
    mean is at most 5% of its magnitude.  A zero half-width counts as
    converged regardless of the mean.
    """
    if batches < 10:
        raise ValueError("need at least 10 batches")
    per_batch = n_samples // batches
    if per_batch < 100:
        raise ValueError("need at least 100 samples per batch")
    used = per_batch * batches
    values = sample_stream(spec, scenario, q_mode, used, seed, threads)
    batch_means = values.reshape(batches, per_batch).mean(axis=1)
    grand = float(batch_means.mean())
    spread = float(batch_means.std(ddof=1))
    quantile = float(student_t.ppf(0.975, batches - 1))
    half = quantile * spread / math.sqrt(batches)
    if half == 0.0:
        ratio = 0.0
    elif grand == 0.0:
        ratio = math.inf
    else:
        ratio = half / abs(grand)
    batch_means.setflags(write=False)
    return ConvergenceReport(
        batch_means=batch_means,
        grand_mean=grand,
        ci_half_width=half,
        ratio=ratio,
        converged=ratio <= 0.05,
        batches=batches,
        samples_used=used,
    )
