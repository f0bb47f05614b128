"""Jet metrics on towers of invariant jets and their Morse integral estimates.

The library builds, in order: truncated-jet arithmetic under the
reparametrization group (``jets``), wedge and scalar Wronskians
(``wronskians``), hermitian curvature data with symmetric-power induction
(``geometry``), four jet-metric families with verified curvature
expansions (``metrics``), and seeded Monte Carlo estimation of the
associated holomorphic Morse integrals with positivity verdicts and
convergence diagnostics (``morse``).  The ``jetmorse`` console script in
``cli`` drives batch runs over scenario files.
"""

from .errors import NumericalGuardError, ScenarioFormatError
from .geometry import (
    BaseScenario,
    CurvatureModel,
    HermitianForm,
    SymPowerCurvature,
    eta_form,
    fiber_trace,
    gamma_of_vector,
    signature,
    sym_power_curvature,
    top_power,
)
from .jets import (
    MAX_JET_ORDER,
    DegenerateJetError,
    Jet,
    Reparam,
    ScalarJet,
    act,
    compose_reparams,
    compose_scalar,
    invert_reparam,
    invert_series,
    normalize_jet,
    pullback_jet,
    reparam_matrix,
    weighted_scale,
)
from .metrics import (
    MetricKind,
    MetricSpec,
    curvature_fd_check,
    curvature_sampler,
    evaluate,
    geometric_epsilons,
    harmonic,
    lcm_exponent,
)
from .morse import (
    ConvergenceReport,
    DeltaScanResult,
    MorseEstimate,
    QMode,
    Verdict,
    closed_form,
    convergence_diag,
    delta_scan,
    fiber_mc,
    growth_bound,
    prefactor,
    verdict,
)
from .scenario_io import read_scenario, write_scenario
from .wronskians import WedgeWronskian, scalar_wronskian, wedge_wronskian, wronskian_weight

__version__ = "0.1.0"

__all__ = [
    "MAX_JET_ORDER",
    "BaseScenario",
    "ConvergenceReport",
    "CurvatureModel",
    "DegenerateJetError",
    "DeltaScanResult",
    "HermitianForm",
    "Jet",
    "MetricKind",
    "MetricSpec",
    "MorseEstimate",
    "NumericalGuardError",
    "QMode",
    "Reparam",
    "ScalarJet",
    "ScenarioFormatError",
    "SymPowerCurvature",
    "Verdict",
    "WedgeWronskian",
    "act",
    "closed_form",
    "compose_reparams",
    "compose_scalar",
    "convergence_diag",
    "curvature_fd_check",
    "curvature_sampler",
    "delta_scan",
    "eta_form",
    "evaluate",
    "fiber_mc",
    "fiber_trace",
    "gamma_of_vector",
    "geometric_epsilons",
    "growth_bound",
    "harmonic",
    "invert_reparam",
    "invert_series",
    "lcm_exponent",
    "normalize_jet",
    "prefactor",
    "pullback_jet",
    "read_scenario",
    "reparam_matrix",
    "scalar_wronskian",
    "signature",
    "sym_power_curvature",
    "top_power",
    "verdict",
    "wedge_wronskian",
    "weighted_scale",
    "write_scenario",
    "wronskian_weight",
]
