"""Tabular binary classifiers trained for accuracy, equalized recourse, and
wide decision margins, plus the auditing tools that go with them.

The usual flow: load a dataset config with :func:`load_spec`, build a run
with :func:`make_run`, train it across seeds with :func:`replicate`, and
write the report with :func:`emit_report`. Lower-level pieces (the network,
the composite objective, distance calculations, the counterfactual search,
and the margin-identity checks) are importable from here as well; the full
surface of each area lives in its submodule.
"""

__version__ = "0.1.0"

from .cfburden import GAConfig, BurdenGap, burden, delta_burden, find_counterfactual
from .data import (
    DataError,
    DatasetSpec,
    EncodedDataset,
    load_and_encode,
    load_spec,
    make_synthetic_pair,
    synthetic_frame,
)
from .distance import closed_form_margin, logit_distance, margin_distance
from .fairloss import (
    LambdaWeights,
    LossBreakdown,
    composite_loss,
    composite_loss_grad,
    fairness_loss,
    group_mean_gap,
)
from .harness import (
    ReplicateAborted,
    RunConfig,
    RunResult,
    TrainingAborted,
    TrainResult,
    emit_report,
    grid_sweep,
    make_run,
    replicate,
    run_result,
    train,
)
from .metrics import MetricReport, evaluate
from .net import (
    Network,
    NetworkConfig,
    forward,
    init_network,
    load_network,
    predict,
    save_network,
)
from .theorycheck import run_checks, verify_margin_identity, verify_near_boundary

__all__ = [
    "__version__",
    "GAConfig",
    "BurdenGap",
    "burden",
    "delta_burden",
    "find_counterfactual",
    "DataError",
    "DatasetSpec",
    "EncodedDataset",
    "load_and_encode",
    "load_spec",
    "make_synthetic_pair",
    "synthetic_frame",
    "closed_form_margin",
    "logit_distance",
    "margin_distance",
    "LambdaWeights",
    "LossBreakdown",
    "composite_loss",
    "composite_loss_grad",
    "fairness_loss",
    "group_mean_gap",
    "ReplicateAborted",
    "RunConfig",
    "RunResult",
    "TrainingAborted",
    "TrainResult",
    "emit_report",
    "grid_sweep",
    "make_run",
    "replicate",
    "run_result",
    "train",
    "MetricReport",
    "evaluate",
    "Network",
    "NetworkConfig",
    "forward",
    "init_network",
    "load_network",
    "predict",
    "save_network",
    "run_checks",
    "verify_margin_identity",
    "verify_near_boundary",
]
