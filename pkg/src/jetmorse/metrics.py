"""The four jet-metric families: values and per-sample curvature forms.

Every metric scores a jet at a base point as a weighted power sum

    |(z, xi)| = ( sum_s eps_s * Q_s(z, xi)^(p/w_s) )^(1/p)

where Q_s is a squared fiber quantity of order s and w_s the matching
weight, so that each summand has a fixed homogeneity degree under the
weighted scaling of jets:

* ``gg``      - Q_s = |xi_s|_h^2 with weight s (degree 2 overall);
* ``test1``   - Q_s = squared h-norm of the order-s wedge Wronskian with
                weight s(s+1) (degree 1 overall);
* ``test2``   - Q_s = |eta_s|_h^2 on the normalized jet with weight
                2(2s-1), times the sphere average of |<eta_1, v>|^2
                (degree 0: the normalized jet is a group invariant);
* ``sympow``  - Q_s = sum of squared s-fold scalar Wronskians of
                symmetric-power frame polynomials pulled back along the
                jet, weight s(s+1) (degree 1 overall).

The h-norms use the quadratic base expansion |v|_h^2 = |v|^2 +
sum c[i,j,a,b] z_i conj(z_j) v_a conj(v_b), the convention that makes the
mixed base Hessian of log|(z, xi)| at z = 0 equal to the positively
weighted curvature average checked by ``curvature_fd_check``.

Curvature samplers return the horizontal curvature form of one fiber
sample; the fiber-vertical positive part is universal on fibers and is
absorbed into the combinatorial prefactors downstream.  Randomness is
always injected by the caller as explicit draws; nothing here holds RNG
state, so every function is pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from math import factorial, lcm, log
from typing import Sequence

import numpy as np

from . import jets as jt
from .geometry import CurvatureModel, HermitianForm, fiber_trace, gamma_batch, sym_multi_indices, sym_power_curvature

__all__ = [
    "MetricKind",
    "MetricSpec",
    "lcm_exponent",
    "exponent_divisor",
    "geometric_epsilons",
    "harmonic",
    "evaluate",
    "curvature_sampler",
    "sampler_batch",
    "sampler_batch_sympow",
    "sampler_weight_total",
    "sympow_orders",
    "sympow_frame_dims",
    "curvature_fd_check",
]


class MetricKind(str, Enum):
    GG = "gg"
    TEST1 = "test1"
    TEST2 = "test2"
    SYMPOW = "sympow"


def lcm_exponent(k: int) -> int:
    """Least common multiple of 1..k."""
    if k < 1:
        raise ValueError("jet order must be >= 1")
    return lcm(*range(1, k + 1))


def exponent_divisor(kind: MetricKind, k: int) -> int:
    """Smallest p making every exponent in the metric an integer."""
    if kind is MetricKind.GG:
        return lcm_exponent(k)
    if kind in (MetricKind.TEST1, MetricKind.SYMPOW):
        return lcm(*(s * (s + 1) for s in range(1, k + 1)))
    return lcm(*(2 * s - 1 for s in range(1, k + 1)))


def geometric_epsilons(k: int, eps0: float = 0.1) -> tuple[float, ...]:
    """Default schedule eps_s = eps0^s realizing 1 >> eps_1 >> ... >> eps_k."""
    if not 0 < eps0 < 1:
        raise ValueError("eps0 must lie in (0, 1)")
    return tuple(eps0**s for s in range(1, k + 1))


def harmonic(k: int) -> float:
    """Partial harmonic sum 1 + 1/2 + ... + 1/k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(sum(1.0 / s for s in range(1, k + 1)))


@dataclass(frozen=True)
class MetricSpec:
    """Metric family, jet order, integer exponent p, epsilon schedule."""

    kind: MetricKind
    k: int
    p: int
    epsilons: tuple[float, ...]
    l_max: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("jet order must be >= 1")
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) != self.k:
            raise ValueError(f"need {self.k} epsilons, got {len(eps)}")
        if any(not 0 < e <= 1 for e in eps):
            raise ValueError("epsilons must lie in (0, 1]")
        if any(eps[i] <= eps[i + 1] for i in range(len(eps) - 1)):
            raise ValueError("epsilons must be strictly decreasing")
        divisor = exponent_divisor(self.kind, self.k)
        if self.p < 1 or self.p % divisor != 0:
            raise ValueError(
                f"p must be a positive multiple of {divisor} for kind {self.kind.value}"
            )
        if self.kind is MetricKind.SYMPOW:
            if self.l_max is None or self.l_max < 1:
                raise ValueError("sympow requires l_max >= 1")
        elif self.l_max is not None:
            raise ValueError("l_max only applies to the sympow kind")
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def auto(cls, kind: MetricKind, k: int, eps0: float = 0.1, l_max: int | None = None):
        """Spec with the smallest valid p and the geometric epsilon schedule."""
        return cls(kind, k, exponent_divisor(kind, k), geometric_epsilons(k, eps0), l_max)


def sympow_orders(spec: MetricSpec) -> range:
    """Symmetric-power orders contributing to a sympow spec."""
    return range(1, min(spec.k, spec.l_max) + 1)


def sympow_frame_dims(spec: MetricSpec, r: int) -> list[int]:
    """Frame dimension of each contributing symmetric power."""
    return [math.comb(r + s - 1, s) for s in sympow_orders(spec)]


# ---------------------------------------------------------------------------
# Metric values.

def _fiber_gram(model: CurvatureModel, z: np.ndarray) -> np.ndarray:
    """Fiber Gram matrix at base point z: identity plus the quadratic term."""
    B = np.einsum("ijab,i,j->ab", model.c, z, np.conj(z))
    return np.eye(model.r, dtype=complex) + B


def _hnorm_sq(v: np.ndarray, gram: np.ndarray) -> float:
    return float(np.einsum("ab,a,b->", gram, v, np.conj(v)).real)


def _logsumexp(values: list[float]) -> float:
    if not values:
        return -math.inf
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + log(sum(math.exp(v - top) for v in values))


def _frame_polynomials(r: int, s: int) -> list[dict]:
    """Orthonormal monomial frame of the s-th symmetric power of the dual fiber."""
    polys = []
    for alpha in sym_multi_indices(r, s):
        alpha_fact = math.prod(factorial(a) for a in alpha)
        scale = math.sqrt(factorial(s) / alpha_fact)
        polys.append({tuple(alpha): scale})
    return polys


def _wronskian_rows(jet: jt.Jet, polys: Sequence[dict], s: int) -> np.ndarray:
    """Matrix [d^j/dt^j (u_col o f)(0)] for j = 1..s over the frame columns."""
    cols = [jt.pullback_jet(poly, jet) for poly in polys]
    return np.array(
        [[g.derivative_at_zero(j) for g in cols] for j in range(1, s + 1)],
        dtype=complex,
    )


def _log_terms(
    spec: MetricSpec,
    model: CurvatureModel,
    z: np.ndarray,
    jet: jt.Jet,
    epsilons: Sequence[float],
) -> tuple[list[float], float]:
    """Per-order log summands of |(z, xi)|^p, plus the test2 prefactor."""
    p = spec.p
    gram = _fiber_gram(model, z)
    logs: list[float] = []
    prefactor = 1.0

    def push(eps: float, base: float, exponent: float):
        if base > 0:
            logs.append(log(eps) + exponent * log(base))

    if spec.kind is MetricKind.GG:
        for s in range(1, spec.k + 1):
            push(epsilons[s - 1], _hnorm_sq(jet.xi[s - 1], gram), p / s)
    elif spec.kind is MetricKind.TEST1:
        scales = np.array([factorial(s) for s in range(1, spec.k + 1)], dtype=float)
        rows = jet.xi * scales[:, None]
        for s in range(1, spec.k + 1):
            block = rows[:s]
            wedge_sq = float(np.linalg.det(block @ gram @ block.conj().T).real)
            push(epsilons[s - 1], wedge_sq, p / (s * (s + 1)))
    elif spec.kind is MetricKind.TEST2:
        eta, _ = jt.normalize_jet(jet)
        for s in range(1, spec.k + 1):
            push(epsilons[s - 1], _hnorm_sq(eta.xi[s - 1], gram), p / (2 * (2 * s - 1)))
        # Exact sphere average of |<eta_1, v>|^2 over unit v.
        prefactor = _hnorm_sq(eta.xi[0], gram) / jet.r
    else:
        for s in sympow_orders(spec):
            polys = _frame_polynomials(jet.r, s)
            M = _wronskian_rows(jet, polys, s)
            Cs = sym_power_curvature(model, s)
            frame_gram = np.eye(Cs.dim, dtype=complex) + np.einsum(
                "ijab,i,j->ab", Cs.C, z, np.conj(z)
            )
            total_sq = float(factorial(s) * np.linalg.det(M @ frame_gram @ M.conj().T).real)
            push(epsilons[s - 1], total_sq, p / (s * (s + 1)))
    return logs, prefactor


def evaluate(spec: MetricSpec, model: CurvatureModel, z, jet: jt.Jet) -> float:
    """Metric value |(z, xi)|; zero exactly when every contributing term vanishes.

    Power sums are accumulated in log space, so arbitrarily large integer
    exponents p are safe.
    """
    if jet.k != spec.k:
        raise ValueError(f"jet order {jet.k} does not match spec order {spec.k}")
    if jet.r != model.r:
        raise ValueError(f"jet rank {jet.r} does not match model rank {model.r}")
    z = np.asarray(z, dtype=complex)
    if z.shape != (model.n,):
        raise ValueError(f"base point must have shape ({model.n},), got {z.shape}")
    logs, prefactor = _log_terms(spec, model, z, jet, spec.epsilons)
    lse = _logsumexp(logs)
    if lse == -math.inf:
        return 0.0
    return math.exp(lse / spec.p) * prefactor


# ---------------------------------------------------------------------------
# Curvature samplers.

def _draw_weights(spec: MetricSpec) -> np.ndarray:
    """Per-draw weights of the horizontal curvature sample."""
    k = spec.k
    if spec.kind is MetricKind.GG or spec.kind is MetricKind.TEST2:
        return np.array([1.0 / s for s in range(1, k + 1)])
    if spec.kind is MetricKind.TEST1:
        # sum_{s >= l} 1/(s(s+1)) telescopes to 1/l - 1/(k+1).
        return np.array([1.0 / l - 1.0 / (k + 1) for l in range(1, k + 1)])
    return np.array([1.0 / (s * (s + 1)) for s in sympow_orders(spec)])


def sampler_weight_total(spec: MetricSpec) -> float:
    """Total trace weight W: the sampler mean is W * fiber_trace / r."""
    if spec.kind is MetricKind.TEST2:
        return 1.0 + harmonic(spec.k)
    if spec.kind is MetricKind.SYMPOW:
        return float(sum(1.0 / (s + 1) for s in sympow_orders(spec)))
    return float(np.sum(_draw_weights(spec)))


def sampler_batch(spec: MetricSpec, model: CurvatureModel, draws: np.ndarray) -> np.ndarray:
    """Curvature samples for a batch of unit draws of shape (..., k, r)."""
    if spec.kind is MetricKind.SYMPOW:
        raise ValueError("use sampler_batch_sympow for the sympow kind")
    weights = _draw_weights(spec)
    out = np.einsum("ijab,...sa,...sb,s->...ij", model.c, draws, np.conj(draws), weights)
    if spec.kind is MetricKind.TEST2:
        out = out + fiber_trace(model).A / model.r
    return out


def sampler_batch_sympow(
    spec: MetricSpec,
    model: CurvatureModel,
    draws: Sequence[np.ndarray],
    tensors: Sequence[np.ndarray] | None = None,
) -> np.ndarray:
    """Curvature samples from one unit draw per symmetric-power fiber.

    ``draws[i]`` has shape (..., dim_s) for the i-th contributing order;
    ``tensors`` may carry precomputed symmetric-power curvature tensors.
    """
    orders = list(sympow_orders(spec))
    if len(draws) != len(orders):
        raise ValueError(f"need {len(orders)} draw arrays, got {len(draws)}")
    if tensors is None:
        tensors = [sym_power_curvature(model, s).C for s in orders]
    out = None
    for s, U, C in zip(orders, draws, tensors):
        term = np.einsum("ijab,...a,...b->...ij", C, U, np.conj(U)) / (s * (s + 1))
        out = term if out is None else out + term
    return out


def curvature_sampler(spec: MetricSpec, model: CurvatureModel, draws) -> HermitianForm:
    """Horizontal curvature form of one fiber sample.

    For the vector kinds ``draws`` supplies k unit vectors in the fiber;
    for sympow it supplies one unit vector per contributing symmetric
    power.  The test2 sample adds the exact sphere average of its first
    direction, fiber_trace / r.
    """
    arrays = [np.asarray(u, dtype=complex) for u in draws]
    if spec.kind is MetricKind.SYMPOW:
        dims = sympow_frame_dims(spec, model.r)
        if len(arrays) != len(dims):
            raise ValueError(f"need {len(dims)} draws, got {len(arrays)}")
        for u, d in zip(arrays, dims):
            if u.shape != (d,):
                raise ValueError(f"draw has shape {u.shape}, expected ({d},)")
            if abs(np.linalg.norm(u) - 1.0) > 1e-8:
                raise ValueError("draws must be unit vectors")
        return HermitianForm(sampler_batch_sympow(spec, model, arrays))
    if len(arrays) != spec.k:
        raise ValueError(f"need {spec.k} draws, got {len(arrays)}")
    for u in arrays:
        if u.shape != (model.r,):
            raise ValueError(f"draw has shape {u.shape}, expected ({model.r},)")
        if abs(np.linalg.norm(u) - 1.0) > 1e-8:
            raise ValueError("draws must be unit vectors")
    return HermitianForm(sampler_batch(spec, model, np.stack(arrays)))


# ---------------------------------------------------------------------------
# Finite-difference verification of the curvature expansion.

def _log_value_unit_eps(spec: MetricSpec, model: CurvatureModel, z: np.ndarray, jet: jt.Jet) -> float:
    # The expansion under test is stated before epsilon scaling.
    logs, _ = _log_terms(spec, model, z, jet, np.ones(spec.k))
    return _logsumexp(logs) / spec.p


def _mixed_hessian(func, n: int, step: float) -> np.ndarray:
    """Mixed Wirtinger Hessian d^2 F / dz_i dconj(z_j) at 0 by central differences."""

    def second(da: np.ndarray, db: np.ndarray) -> float:
        if np.array_equal(da, db):
            return (func(step * da) - 2.0 * func(np.zeros(n, dtype=complex)) + func(-step * da)) / step**2
        return (
            func(step * (da + db))
            - func(step * (da - db))
            - func(step * (-da + db))
            + func(step * (-da - db))
        ) / (4.0 * step**2)

    H = np.zeros((n, n), dtype=complex)
    basis = np.eye(n, dtype=complex)
    for i in range(n):
        xi, yi = basis[i], 1j * basis[i]
        H[i, i] = 0.25 * (second(xi, xi) + second(yi, yi))
        for j in range(i + 1, n):
            xj, yj = basis[j], 1j * basis[j]
            real_part = second(xi, xj) + second(yi, yj)
            imag_part = second(xi, yj) - second(yi, xj)
            H[i, j] = 0.25 * (real_part + 1j * imag_part)
            H[j, i] = np.conj(H[i, j])
    return H


def curvature_fd_check(
    spec: MetricSpec, model: CurvatureModel, jet: jt.Jet, step: float = 1e-3
) -> float:
    """Deviation between the differentiated metric and its curvature formula.

    Computes the mixed base Hessian of log|(z, xi)| at z = 0 by central
    finite differences (epsilon weights stripped, as the expansion is
    stated before them) and compares it against

        sum_s (1/s) w_s * gamma(xi_s / |xi_s|),
        w_s = |xi_s|^(2p/s) / sum_t |xi_t|^(2p/t),

    returning the maximum entry deviation relative to the largest formula
    entry (absolute when the formula vanishes identically).
    """
    if spec.kind is not MetricKind.GG:
        raise ValueError("the expansion check applies to the gg kind only")
    if jet.k != spec.k or jet.r != model.r:
        raise ValueError("jet dimensions do not match spec and model")
    norms = np.linalg.norm(jet.xi, axis=1)
    if np.any(norms == 0):
        raise ValueError("every jet row must be nonzero")

    def F(z: np.ndarray) -> float:
        return _log_value_unit_eps(spec, model, z, jet)

    hess = _mixed_hessian(F, model.n, step)

    log_terms = (2.0 * spec.p / np.arange(1, spec.k + 1)) * np.log(norms)
    log_total = _logsumexp(list(log_terms))
    weights = np.exp(log_terms - log_total)
    units = jet.xi / norms[:, None]
    formula = np.einsum(
        "ijab,sa,sb,s->ij",
        model.c,
        units,
        np.conj(units),
        weights / np.arange(1, spec.k + 1),
    )

    scale = float(np.max(np.abs(formula)))
    deviation = float(np.max(np.abs(hess - formula)))
    return deviation / scale if scale > 0 else deviation
