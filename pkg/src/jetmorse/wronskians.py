"""Wedge and scalar Wronskians of jets, with their scaling weights.

Minors are taken on unscaled derivative rows s! * xi_s so that the wedge
and the scalar determinant share the classical convention.  Under the
reparametrization group the order-s wedge picks up the factor
alpha_1^(s(s+1)/2); that exponent is ``wronskian_weight``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import Sequence

import numpy as np

from .jets import Jet, ScalarJet

__all__ = ["WedgeWronskian", "wedge_wronskian", "scalar_wronskian", "wronskian_weight"]


@dataclass(frozen=True)
class WedgeWronskian:
    """Order-l wedge of the first l derivative rows of a jet.

    ``components`` lists the l x l minors over column subsets in
    lexicographic order (empty when l exceeds the fiber rank).
    """

    l: int
    components: np.ndarray
    norm: float


def wedge_wronskian(jet: Jet, l: int) -> WedgeWronskian:
    """Minors of the matrix whose rows are the unscaled derivatives 1..l."""
    if not 1 <= l <= jet.k:
        raise ValueError(f"wedge order {l} outside 1..{jet.k}")
    scales = np.array([factorial(s) for s in range(1, l + 1)], dtype=float)
    rows = jet.xi[:l] * scales[:, None]
    subsets = list(combinations(range(jet.r), l))
    components = np.array(
        [np.linalg.det(rows[:, list(cols)]) for cols in subsets], dtype=complex
    )
    components.setflags(write=False)
    return WedgeWronskian(l, components, float(np.linalg.norm(components)))


def scalar_wronskian(germs: Sequence[ScalarJet]) -> complex:
    """Determinant of [g_i^(j)(0)] with derivative orders j = 1..s.

    For two germs this is g_1'(0) g_2''(0) - g_2'(0) g_1''(0).
    """
    s = len(germs)
    if s < 1:
        raise ValueError("need at least one germ")
    for g in germs:
        if g.k < s:
            raise ValueError(f"germ of order {g.k} too short for a {s}-fold Wronskian")
    matrix = np.array(
        [[g.derivative_at_zero(j) for j in range(1, s + 1)] for g in germs],
        dtype=complex,
    )
    return complex(np.linalg.det(matrix))


def wronskian_weight(s: int) -> int:
    """Scaling weight s(s+1)/2 of the order-s wedge."""
    if s < 1:
        raise ValueError("order must be >= 1")
    return s * (s + 1) // 2
