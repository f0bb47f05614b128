"""Canonical JSON serialization of base scenarios.

Schema (complex numbers are [re, im] pairs; ``c`` nests i, j outermost,
then alpha, beta):

    {
      "n": 2, "r": 2, "delta": 0.0,
      "theta_L": [[[1.0, 0.0], [0.0, 0.0]], ...],
      "samples": [
        {"weight": 1.0, "c": [[[[re, im], ...], ...], ...]}
      ]
    }

The writer always emits pairs; the parser also accepts bare numbers for
real entries.  Floats survive a write/read round trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ScenarioFormatError
from .geometry import BaseScenario, CurvatureModel, HermitianForm, hermitian_violation

__all__ = ["read_scenario", "write_scenario", "scenario_to_dict", "scenario_from_dict"]


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _complex_array(data, shape: tuple[int, ...], where: str) -> np.ndarray:
    def convert(node, depth: int):
        if depth == len(shape):
            if isinstance(node, (int, float)):
                return complex(node)
            if (
                isinstance(node, list)
                and len(node) == 2
                and all(isinstance(x, (int, float)) for x in node)
            ):
                return complex(node[0], node[1])
            raise ScenarioFormatError(f"{where}: expected a number or [re, im] pair, got {node!r}")
        if not isinstance(node, list) or len(node) != shape[depth]:
            raise ScenarioFormatError(
                f"{where}: expected a list of length {shape[depth]} at depth {depth}"
            )
        return [convert(child, depth + 1) for child in node]

    return np.array(convert(data, 0), dtype=complex)


def scenario_to_dict(scenario: BaseScenario) -> dict:
    n, r = scenario.n, scenario.r
    return {
        "n": n,
        "r": r,
        "delta": scenario.delta,
        "theta_L": [[_pair(scenario.theta_L.A[i, j]) for j in range(n)] for i in range(n)],
        "samples": [
            {
                "weight": w,
                "c": [
                    [
                        [[_pair(m.c[i, j, a, b]) for b in range(r)] for a in range(r)]
                        for j in range(n)
                    ]
                    for i in range(n)
                ],
            }
            for w, m in scenario.samples
        ],
    }


def scenario_from_dict(data: dict) -> BaseScenario:
    for field in ("n", "r", "samples", "theta_L"):
        if field not in data:
            raise ScenarioFormatError(f"missing required field {field!r}")
    n, r = data["n"], data["r"]
    if not (isinstance(n, int) and n >= 1 and isinstance(r, int) and r >= 1):
        raise ScenarioFormatError("n and r must be positive integers")
    delta = data.get("delta", 0.0)
    if not isinstance(delta, (int, float)) or delta < 0:
        raise ScenarioFormatError(f"delta must be a nonnegative number, got {delta!r}")

    raw_samples = data["samples"]
    if not isinstance(raw_samples, list) or not raw_samples:
        raise ScenarioFormatError("samples must be a nonempty list")
    weights = []
    models = []
    for s, entry in enumerate(raw_samples):
        if not isinstance(entry, dict) or "weight" not in entry or "c" not in entry:
            raise ScenarioFormatError(f"samples[{s}] must carry 'weight' and 'c'")
        weight = entry["weight"]
        if not isinstance(weight, (int, float)) or weight <= 0:
            raise ScenarioFormatError(f"samples[{s}].weight must be positive, got {weight!r}")
        c = _complex_array(entry["c"], (n, n, r, r), f"samples[{s}].c")
        where = hermitian_violation(c)
        if where is not None:
            raise ScenarioFormatError(
                f"samples[{s}].c violates hermitian symmetry c[i,j,a,b] = conj(c[j,i,b,a]) "
                f"at (i,j,alpha,beta) = {tuple(x + 1 for x in where)} (1-based)"
            )
        weights.append(float(weight))
        models.append(CurvatureModel(c))

    total = sum(weights)
    if abs(total - 1.0) > 1e-9:
        raise ScenarioFormatError(f"weights must sum to 1, got {total}")

    theta = _complex_array(data["theta_L"], (n, n), "theta_L")
    if np.max(np.abs(theta - theta.conj().T)) > 1e-12:
        raise ScenarioFormatError("theta_L is not hermitian within tolerance")
    if np.linalg.eigvalsh(theta)[0] <= 0:
        raise ScenarioFormatError("theta_L must be positive definite")

    try:
        return BaseScenario(
            samples=tuple(zip(weights, models)),
            theta_L=HermitianForm(theta),
            delta=float(delta),
        )
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from exc


def read_scenario(path) -> BaseScenario:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioFormatError(f"{path}: top level must be an object")
    return scenario_from_dict(data)


def write_scenario(scenario: BaseScenario, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(scenario_to_dict(scenario), handle, indent=2, sort_keys=True)
        handle.write("\n")
