"""Soft landmark-guided elastic alignment of sampled functions on [0, 1]."""
from .bundle import BundleError, FunctionBundle, read_bundle, write_bundle
from .dp import (
    AlignOutcome,
    DpConfig,
    dp_penalized,
    dp_unconstrained,
    objective_eval,
    penalized_l2_baseline,
    penalty_term,
)
from .funcs import (
    CellSrvf,
    DegenerateWarpError,
    Grid,
    SampledFunction,
    Srvf,
    Warp,
    compose,
    from_srvf,
    group_action,
    invert,
    l2_dist,
    to_srvf,
    warp_apply,
)
from .landmarks import (
    LandmarkError,
    LandmarkSet,
    ReferencePolicy,
    hard_register_pair,
    hard_register_to_reference,
    landmark_dispersion,
)
from .results import RunReport, write_results
from .soft import (
    LoocvResult,
    MultiAlignResult,
    SoftPairResult,
    Workspace,
    d_lambda,
    hard_multiple,
    loocv_lambda,
    soft_multiple,
    soft_pair,
    unconstrained_multiple,
)
from .synth import SCENARIOS, synth_scenario

__version__ = "0.1.0"

__all__ = [
    "AlignOutcome",
    "BundleError",
    "CellSrvf",
    "compose",
    "d_lambda",
    "DegenerateWarpError",
    "dp_penalized",
    "dp_unconstrained",
    "DpConfig",
    "from_srvf",
    "FunctionBundle",
    "Grid",
    "group_action",
    "hard_multiple",
    "hard_register_pair",
    "hard_register_to_reference",
    "invert",
    "l2_dist",
    "landmark_dispersion",
    "LandmarkError",
    "LandmarkSet",
    "loocv_lambda",
    "LoocvResult",
    "MultiAlignResult",
    "objective_eval",
    "penalized_l2_baseline",
    "penalty_term",
    "read_bundle",
    "ReferencePolicy",
    "RunReport",
    "SampledFunction",
    "SCENARIOS",
    "soft_multiple",
    "soft_pair",
    "SoftPairResult",
    "Srvf",
    "synth_scenario",
    "to_srvf",
    "unconstrained_multiple",
    "Warp",
    "warp_apply",
    "Workspace",
    "write_bundle",
    "write_results",
]
