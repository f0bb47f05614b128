"""Hermitian curvature data on the fiber bundle and induced constructions.

The fiber metric near a base point is encoded by the coefficient tensor
c[i, j, a, b] of its quadratic expansion in base coordinates: the Gram
matrix of a fiber frame is

    <e_a, e_b> = delta_ab - sum_ij c[i, j, a, b] z_i conj(z_j) + ...

so the curvature tensor of the fiber bundle is +c, the determinant
bundle of the dual has curvature -trace_fiber(c), and the limiting base
form is eta = -trace_fiber(c) + (1 - delta) * theta_L.

Hermitian (1,1)-forms at a base point are plain n x n hermitian matrices;
their eigenvalue signature drives the Morse index bookkeeping and their
determinant stands in for the top wedge power (a fixed positive
normalization absorbed identically in every reported estimate).

Pure functions over immutable tensors; safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import sqrt

import numpy as np

from .errors import NumericalGuardError

__all__ = [
    "HERMITIAN_TOL",
    "EIGENVALUE_TOL",
    "SYM_DIMENSION_CAP",
    "CurvatureModel",
    "HermitianForm",
    "BaseScenario",
    "SymPowerCurvature",
    "hermitian_violation",
    "gamma_of_vector",
    "gamma_batch",
    "fiber_trace",
    "eta_form",
    "signature",
    "top_power",
    "sym_multi_indices",
    "sym_power_curvature",
]

HERMITIAN_TOL = 1e-12
EIGENVALUE_TOL = 1e-9
SYM_DIMENSION_CAP = 512


def hermitian_violation(c: np.ndarray) -> tuple[int, int, int, int] | None:
    """First index (i, j, a, b), 0-based, where c != conj(c[j, i, b, a])."""
    mirrored = np.conj(np.transpose(c, (1, 0, 3, 2)))
    bad = np.argwhere(np.abs(c - mirrored) > HERMITIAN_TOL)
    if bad.size == 0:
        return None
    return tuple(int(x) for x in bad[0])


@dataclass(frozen=True)
class CurvatureModel:
    """Coefficient tensor c[i, j, a, b] of the fiber-metric expansion."""

    c: np.ndarray

    def __post_init__(self):
        arr = np.array(self.c, dtype=complex)
        if arr.ndim != 4 or arr.shape[0] != arr.shape[1] or arr.shape[2] != arr.shape[3]:
            raise ValueError(f"curvature tensor must have shape (n, n, r, r), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("curvature tensor entries must be finite")
        where = hermitian_violation(arr)
        if where is not None:
            raise ValueError(
                "curvature tensor violates c[i,j,a,b] = conj(c[j,i,b,a]) at "
                f"(i,j,alpha,beta) = {tuple(x + 1 for x in where)} (1-based)"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "c", arr)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def r(self) -> int:
        return self.c.shape[2]


@dataclass(frozen=True)
class HermitianForm:
    """An n x n hermitian matrix representing a (1,1)-form at a base point."""

    A: np.ndarray

    def __post_init__(self):
        arr = np.array(self.A, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"form must be a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("form entries must be finite")
        if np.max(np.abs(arr - arr.conj().T)) > HERMITIAN_TOL:
            raise ValueError("form is not hermitian within tolerance")
        arr.setflags(write=False)
        object.__setattr__(self, "A", arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class BaseScenario:
    """Weighted base samples of curvature data plus an ample twist form.

    ``samples`` is a sequence of (weight, model) pairs whose weights are a
    probability distribution over base points; ``theta_L`` is the positive
    definite curvature of the ample twist; ``delta`` is the nonnegative
    twist strength (the limiting form is eta - delta * theta_L).
    """

    samples: tuple[tuple[float, CurvatureModel], ...]
    theta_L: HermitianForm
    delta: float = 0.0

    def __post_init__(self):
        samples = tuple((float(w), m) for w, m in self.samples)
        if not samples:
            raise ValueError("scenario must contain at least one base sample")
        for w, _ in samples:
            if not w > 0:
                raise ValueError(f"sample weights must be positive, got {w}")
        total = sum(w for w, _ in samples)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")
        n, r = samples[0][1].n, samples[0][1].r
        for _, m in samples:
            if (m.n, m.r) != (n, r):
                raise ValueError("all base samples must share the same (n, r)")
        if self.theta_L.n != n:
            raise ValueError(
                f"theta_L dimension {self.theta_L.n} does not match base dimension {n}"
            )
        eigvals = np.linalg.eigvalsh(self.theta_L.A)
        if eigvals[0] <= 0:
            raise ValueError(f"theta_L must be positive definite, min eigenvalue {eigvals[0]}")
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def n(self) -> int:
        return self.samples[0][1].n

    @property
    def r(self) -> int:
        return self.samples[0][1].r


@dataclass(frozen=True)
class SymPowerCurvature:
    """Curvature tensor induced on the l-th symmetric power of the fiber."""

    l: int
    C: np.ndarray

    @property
    def dim(self) -> int:
        return self.C.shape[2]


def gamma_batch(model: CurvatureModel, vectors: np.ndarray) -> np.ndarray:
    """Curvature form contracted with each fiber vector (no unit check).

    ``vectors`` has shape (..., r); the result has shape (..., n, n) with
    entries sum_ab c[i, j, a, b] v_a conj(v_b).
    """
    return np.einsum("ijab,...a,...b->...ij", model.c, vectors, np.conj(vectors))


def gamma_of_vector(model: CurvatureModel, u: np.ndarray) -> HermitianForm:
    """Curvature form evaluated on a unit fiber vector."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (model.r,):
        raise ValueError(f"vector must have shape ({model.r},), got {u.shape}")
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise ValueError("fiber vector must have unit norm")
    return HermitianForm(gamma_batch(model, u))


def fiber_trace(model: CurvatureModel) -> HermitianForm:
    """Trace of the curvature tensor over the fiber indices."""
    return HermitianForm(np.einsum("ijaa->ij", model.c))


def eta_form(scenario: BaseScenario, index: int) -> HermitianForm:
    """Limiting base form -trace_fiber(c) + (1 - delta) * theta_L at a sample."""
    if not 0 <= index < len(scenario.samples):
        raise ValueError(f"sample index {index} outside 0..{len(scenario.samples) - 1}")
    _, model = scenario.samples[index]
    eta = -fiber_trace(model).A + (1.0 - scenario.delta) * scenario.theta_L.A
    return HermitianForm(eta)


def signature(form: HermitianForm, tol: float = EIGENVALUE_TOL) -> tuple[int, int, int]:
    """Counts of eigenvalues below -tol, within [-tol, tol], above tol."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    eigvals = np.linalg.eigvalsh(form.A)
    n_neg = int(np.sum(eigvals < -tol))
    n_pos = int(np.sum(eigvals > tol))
    return n_neg, form.n - n_neg - n_pos, n_pos


def top_power(form: HermitianForm) -> float:
    """Real determinant, standing in for the n-fold wedge power."""
    return float(np.linalg.det(form.A).real)


def sym_multi_indices(r: int, l: int) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree l on r variables, lexicographic."""
    exps = []
    for combo in combinations_with_replacement(range(r), l):
        e = [0] * r
        for i in combo:
            e[i] += 1
        exps.append(tuple(e))
    return sorted(exps)


def sym_power_curvature(model: CurvatureModel, l: int) -> SymPowerCurvature:
    """Curvature tensor of the induced metric on the l-th symmetric power.

    The frame is the scaled monomial basis sqrt(l!/alpha!) e^alpha, which
    is orthonormal at the base point; expanding the pairwise fiber inner
    products through the embedding into the l-fold tensor power gives the
    quadratic Gram coefficient

        C[i, j, A, B] = sum sqrt(A_a * B_b) * c[i, j, a, b]

    over the pairs (a, b) with A - e_a = B - e_b.  In particular the
    diagonal entry at A is sum_a A_a * c[i, j, a, a].
    """
    if l < 1:
        raise ValueError("power must be >= 1")
    indices = sym_multi_indices(model.r, l)
    dim = len(indices)
    if dim > SYM_DIMENSION_CAP:
        raise NumericalGuardError(
            f"symmetric power dimension {dim} exceeds cap {SYM_DIMENSION_CAP}"
        )
    position = {m: i for i, m in enumerate(indices)}
    n, r = model.n, model.r
    C = np.zeros((n, n, dim, dim), dtype=complex)
    for iA, A in enumerate(indices):
        for a in range(r):
            if A[a] == 0:
                continue
            reduced = list(A)
            reduced[a] -= 1
            for b in range(r):
                B = list(reduced)
                B[b] += 1
                iB = position[tuple(B)]
                C[:, :, iA, iB] += sqrt(A[a] * B[b]) * model.c[:, :, a, b]
    C.setflags(write=False)
    return SymPowerCurvature(l, C)
