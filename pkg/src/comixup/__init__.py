"""Saliency-guided batch mixup via submodular-supermodular labeling optimization."""

from .energy import (
    EnergyBreakdown,
    EnergyModel,
    Hyperparams,
    Labeling,
    aggregate,
    labeling_from_ratios,
    objective_eval,
    prior_logpmf,
    soft_output_ratio,
)
from .errors import ComixError
from .graphcut import FlowNetwork, PairwiseEnergy, alpha_beta_swap, binary_fuse
from .mixer import MixResult, assemble, upsample_labeling
from .modularize import ConditionedModular, condition, modular_value
from .optimizer import (
    OptimizerConfig,
    RunStats,
    allowed_states,
    comix_optimize,
    init_labeling,
    optimize_partition,
)
from .pipeline import PipelineResult, run_comix
from .saliency import (
    CompatibilityMatrix,
    compatibility_matrix,
    downsample_saliency,
    normalize_saliency,
    proxy_saliency,
    unary_costs,
)
from .tensorio import (
    TensorContainer,
    container_from_array,
    load_array,
    load_image_batch,
    read_container,
    save_array,
    write_container,
)

__version__ = "0.1.0"
