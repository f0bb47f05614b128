"""Truncated jets of holomorphic curves and their reparametrization group.

A jet of order ``k`` with fiber rank ``r`` is stored as a k x r complex
matrix whose row ``s`` holds the scaled derivative f^(s)(0)/s!, i.e. the
t^s Taylor coefficient of each fiber component of a representative curve
f : (C, 0) -> C^r.  Truncated reparametrizations

    phi(t) = a1*t + a2*t^2 + ... + ak*t^k,   a1 != 0

form a group under composition.  In the scaled convention the action
f -> f o phi is exactly a row-vector-times-matrix product, where the
matrix row ``s`` lists the Taylor coefficients of phi(t)^s.

The module also provides the scalar-series kernel shared by everything
downstream: truncated multiplication, composition, compositional
inversion, normalization of a jet by its first component, and pullback of
polynomials along a jet.

All values are immutable after construction and every operation is a pure
function of its inputs, so they are safe to share across concurrent
executors.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MAX_JET_ORDER",
    "DegenerateJetError",
    "Jet",
    "Reparam",
    "ScalarJet",
    "reparam_matrix",
    "act",
    "compose_reparams",
    "invert_reparam",
    "invert_series",
    "compose_scalar",
    "normalize_jet",
    "weighted_scale",
    "pullback_jet",
    "jet_component",
    "suggest_leading_coordinate",
    "permute_coordinates",
]

# Factorials and exponent lcms explode past this; desk-scale ceiling.
MAX_JET_ORDER = 12


class DegenerateJetError(ValueError):
    """Normalization is undefined: the leading coefficient xi[1,1] vanishes."""


def _frozen_complex(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.ndim != ndim:
        raise ValueError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{what} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Jet:
    """Order-k jet with rank-r fiber; row s of ``xi`` is f^(s)(0)/s!."""

    xi: np.ndarray

    def __post_init__(self):
        arr = _frozen_complex(self.xi, 2, "jet matrix")
        if arr.shape[0] > MAX_JET_ORDER:
            raise ValueError(f"jet order {arr.shape[0]} exceeds cap {MAX_JET_ORDER}")
        object.__setattr__(self, "xi", arr)

    @property
    def k(self) -> int:
        return self.xi.shape[0]

    @property
    def r(self) -> int:
        return self.xi.shape[1]


@dataclass(frozen=True)
class Reparam:
    """Truncated reparametrization t -> a1*t + ... + ak*t^k with a1 != 0."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = _frozen_complex(self.alpha, 1, "reparametrization coefficients")
        if arr.shape[0] > MAX_JET_ORDER:
            raise ValueError(f"order {arr.shape[0]} exceeds cap {MAX_JET_ORDER}")
        if arr[0] == 0:
            raise ValueError("reparametrization must have a1 != 0")
        object.__setattr__(self, "alpha", arr)

    @property
    def k(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def identity(cls, k: int) -> "Reparam":
        alpha = np.zeros(k, dtype=complex)
        alpha[0] = 1.0
        return cls(alpha)

    @classmethod
    def scaling(cls, lam: complex, k: int) -> "Reparam":
        """The linear reparametrization t -> lam * t."""
        alpha = np.zeros(k, dtype=complex)
        alpha[0] = lam
        return cls(alpha)


@dataclass(frozen=True)
class ScalarJet:
    """Taylor coefficients (t^1 .. t^k) of a scalar germ with zero constant term."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = _frozen_complex(self.coeffs, 1, "scalar jet coefficients")
        object.__setattr__(self, "coeffs", arr)

    @property
    def k(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def variable(cls, k: int) -> "ScalarJet":
        """The germ of t itself, truncated at order k."""
        coeffs = np.zeros(k, dtype=complex)
        coeffs[0] = 1.0
        return cls(coeffs)

    def derivative_at_zero(self, order: int) -> complex:
        """g^(order)(0), recovered from the scaled coefficient."""
        if not 1 <= order <= self.k:
            raise ValueError(f"derivative order {order} outside 1..{self.k}")
        return complex(factorial(order) * self.coeffs[order - 1])


# ---------------------------------------------------------------------------
# Truncated series kernel.  Arrays index coefficients of t^1 .. t^k; the
# constant term is implicitly zero throughout.

def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = a.shape[0]
    out = np.zeros(k, dtype=complex)
    for i in range(k - 1):
        if a[i] != 0:
            out[i + 1:] += a[i] * b[: k - i - 1]
    return out


def _series_compose(u: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Coefficients of u(g(t)) truncated at the common order (Horner in g)."""
    k = u.shape[0]
    const = u[k - 1]
    series = np.zeros(k, dtype=complex)
    for s in range(k - 2, -1, -1):
        series = _series_mul(g, series) + const * g
        const = u[s]
    return _series_mul(g, series) + const * g


def _series_invert(g: np.ndarray) -> np.ndarray:
    """Compositional inverse: h with g(h(t)) = t + O(t^{k+1})."""
    k = g.shape[0]
    if g[0] == 0:
        raise ValueError("series with vanishing first coefficient has no inverse")
    inv = np.zeros(k, dtype=complex)
    inv[0] = 1.0 / g[0]
    for m in range(2, k + 1):
        # With inv_m still zero, the t^m residual of g(inv) is linear in inv_m.
        residual = _series_compose(g, inv)[m - 1]
        inv[m - 1] = -residual / g[0]
    return inv


# ---------------------------------------------------------------------------
# Group action.

def reparam_matrix(phi: Reparam, k: int) -> np.ndarray:
    """Upper-triangular action matrix: entry (s, m) is [t^m] phi(t)^s.

    Indices are 1-based in that description; the returned array is k x k
    with diagonal a1^s.  A jet row vector in the scaled convention times
    this matrix is the jet of f o phi.
    """
    if k < 1:
        raise ValueError("order must be >= 1")
    if phi.k < k:
        raise ValueError(f"reparametrization has {phi.k} coefficients, need {k}")
    a = np.array(phi.alpha[:k])
    mat = np.zeros((k, k), dtype=complex)
    power = a
    mat[0] = power
    for s in range(1, k):
        power = _series_mul(power, a)
        mat[s] = power
    return mat


def act(phi: Reparam, jet: Jet) -> Jet:
    """Jet of f o phi, computed by the matrix action on the scaled rows."""
    if phi.k != jet.k:
        raise ValueError(f"order mismatch: reparametrization {phi.k}, jet {jet.k}")
    mat = reparam_matrix(phi, jet.k)
    return Jet(mat.T @ jet.xi)


def compose_reparams(phi: Reparam, psi: Reparam) -> Reparam:
    """Truncated coefficients of phi o psi.

    Orientation of the group law, verified as a property test:
    ``reparam_matrix(compose_reparams(phi, psi)) ==
    reparam_matrix(phi) @ reparam_matrix(psi)``, matching
    ``act(psi, act(phi, jet)) == act(compose_reparams(phi, psi), jet)``
    in the row-vector convention.
    """
    if phi.k != psi.k:
        raise ValueError(f"order mismatch: {phi.k} vs {psi.k}")
    return Reparam(_series_compose(phi.alpha, psi.alpha))


def invert_reparam(phi: Reparam) -> Reparam:
    """Compositional inverse of phi within the truncated group."""
    return Reparam(_series_invert(phi.alpha))


def invert_series(g: ScalarJet) -> ScalarJet:
    """Compositional inverse of a scalar germ with nonzero first coefficient."""
    return ScalarJet(_series_invert(g.coeffs))


def compose_scalar(u: ScalarJet, g: ScalarJet) -> ScalarJet:
    """Truncated coefficients of u o g (both germs have zero constant term)."""
    if u.k != g.k:
        raise ValueError(f"order mismatch: {u.k} vs {g.k}")
    return ScalarJet(_series_compose(u.coeffs, g.coeffs))


def jet_component(jet: Jet, m: int) -> ScalarJet:
    """Scalar germ of fiber component m (0-based column)."""
    if not 0 <= m < jet.r:
        raise ValueError(f"component {m} outside 0..{jet.r - 1}")
    return ScalarJet(np.array(jet.xi[:, m]))


def weighted_scale(lam: complex, jet: Jet) -> Jet:
    """Multiply row s by lam^s; equals the action of t -> lam*t."""
    if lam == 0:
        raise ValueError("scale factor must be nonzero")
    powers = np.power(complex(lam), np.arange(1, jet.k + 1))
    return Jet(jet.xi * powers[:, None])


def normalize_jet(jet: Jet) -> tuple[Jet, list[complex]]:
    """Reparametrize a jet so its first component becomes the identity germ.

    Writing the fiber components as germs (f_1, ..., f_r), the normalized
    jet is (t, g_2, ..., g_r) with g_m = f_m o f_1^{-1}.  The result is
    invariant under the full reparametrization group: replacing f by
    f o phi leaves every g_m unchanged.

    Also returned are the numerator values P_(m,s): the s-th derivative of
    g_m at 0 has denominator f_1'(0)^(2s-1), and P_(m,s) is the derivative
    with that denominator cleared,

        P_(m,s) = g_m^(s)(0) * f_1'(0)^(2s-1),

    a polynomial in the raw jet entries (for s = 2 it is the two-function
    Wronskian f_1' f_2'' - f_2' f_1'').  They are listed for components
    m = 2..r and orders s = 2..k, in lexicographic (m, s) order.

    Raises DegenerateJetError when xi[1,1] = 0; the caller may permute
    fiber coordinates (see ``suggest_leading_coordinate``).
    """
    lead = jet.xi[0, 0]
    if lead == 0:
        raise DegenerateJetError(
            "first fiber component is not immersive (xi[1,1] = 0); "
            "consider permuting coordinates"
        )
    inverse = _series_invert(np.array(jet.xi[:, 0]))
    columns = [_series_compose(np.array(jet.xi[:, m]), inverse) for m in range(jet.r)]
    eta = Jet(np.stack(columns, axis=1))
    numerators: list[complex] = []
    for m in range(1, jet.r):
        for s in range(2, jet.k + 1):
            g_deriv = factorial(s) * eta.xi[s - 1, m]
            numerators.append(complex(g_deriv * lead ** (2 * s - 1)))
    return eta, numerators


def suggest_leading_coordinate(jet: Jet) -> int:
    """Column (0-based) with the largest first-derivative magnitude.

    Intended as the permutation hint when normalize_jet signals a
    degenerate leading coordinate.
    """
    return int(np.argmax(np.abs(jet.xi[0])))


def permute_coordinates(jet: Jet, order: Sequence[int]) -> Jet:
    """Reorder fiber coordinates; ``order`` lists source columns."""
    if sorted(order) != list(range(jet.r)):
        raise ValueError(f"order must be a permutation of 0..{jet.r - 1}")
    return Jet(jet.xi[:, list(order)])


def pullback_jet(u, jet: Jet) -> ScalarJet:
    """Taylor coefficients of t -> u(f(t)) - u(f(0)) along the jet.

    ``u`` is a polynomial on the fiber given as a mapping (or iterable of
    pairs) from exponent tuples of length r to complex coefficients.  The
    result is computed purely from jet data by truncated multiplication of
    the component germs; constant monomials drop out.
    """
    terms: Iterable = u.items() if isinstance(u, Mapping) else u
    out = np.zeros(jet.k, dtype=complex)
    for exponents, coefficient in terms:
        if len(exponents) != jet.r:
            raise ValueError(
                f"monomial exponents {exponents} do not match fiber rank {jet.r}"
            )
        degree = sum(exponents)
        if degree == 0 or degree > jet.k:
            continue  # constants are dropped; high degrees truncate to zero
        term = None
        for m, e in enumerate(exponents):
            col = np.array(jet.xi[:, m])
            for _ in range(int(e)):
                term = col if term is None else _series_mul(term, col)
        out += complex(coefficient) * term
    return ScalarJet(out)
