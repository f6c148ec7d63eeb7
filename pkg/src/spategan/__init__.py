"""Spatio-temporal association statistics, causal entropic transport and a
desk-scale adversarial trainer, with deterministic synthetic data and a
binary tensor container shared by all tools."""

from .errors import (
    DegenerateGridError,
    DegenerateTotalError,
    FormatError,
    NumericalError,
    PayloadLengthError,
    ShapeError,
    SpateganError,
    ValidationError,
)
from .expectation import (
    ExpectationConfig,
    ExpectationField,
    expectation,
    temporal_kernel,
)
from .metrics import SampleSet, emd, knn_c2st, median_bandwidth, mmd_squared
from .nets import (
    DiscriminatorParams,
    GeneratorParams,
    NetDims,
    RecurrentNet,
    discriminator_forward,
    discriminator_forward_batch,
    generator_forward,
    init_discriminator,
    init_generator,
)
from .rng import SplitMix64
from .simulate import SimConfig, gen_moving_blobs, gen_pseudo_lgcp, gen_static_dynamic
from .spate import SpateField, concat_embedding, local_morans_i, spate
from .tensor import (
    SpatioTemporalBatch,
    read_csv_frames,
    read_stgk,
    render_pgm,
    write_csv_frames,
    write_pgm,
    write_stgk,
)
from .train import (
    TrainConfig,
    TrainState,
    adam_step,
    fd_gradient,
    objective_terms,
    spate_gan_objective,
    train,
)
from .transport import (
    DiscriminatorEvals,
    SinkhornConfig,
    SinkhornResult,
    base_cost,
    causal_cost,
    exact_ot_bruteforce,
    martingale_penalty,
    mixed_sinkhorn_divergence,
    pairwise_base_cost,
    sinkhorn,
)
from .weights import WeightMatrix, build_grid_weights

__version__ = "0.1.0"

__all__ = [
    "SpateganError", "ValidationError", "ShapeError", "DegenerateGridError",
    "DegenerateTotalError", "NumericalError", "FormatError", "PayloadLengthError",
    "SplitMix64",
    "SpatioTemporalBatch", "read_stgk", "write_stgk", "read_csv_frames",
    "write_csv_frames", "write_pgm", "render_pgm",
    "WeightMatrix", "build_grid_weights",
    "ExpectationConfig", "ExpectationField", "expectation", "temporal_kernel",
    "SpateField", "spate", "local_morans_i", "concat_embedding",
    "SinkhornConfig", "SinkhornResult", "sinkhorn", "exact_ot_bruteforce",
    "base_cost", "causal_cost", "pairwise_base_cost", "DiscriminatorEvals",
    "martingale_penalty", "mixed_sinkhorn_divergence",
    "SampleSet", "emd", "mmd_squared", "median_bandwidth", "knn_c2st",
    "SimConfig", "gen_pseudo_lgcp", "gen_moving_blobs", "gen_static_dynamic",
    "NetDims", "GeneratorParams", "RecurrentNet", "DiscriminatorParams",
    "generator_forward", "discriminator_forward", "discriminator_forward_batch",
    "init_generator", "init_discriminator",
    "TrainConfig", "TrainState", "fd_gradient", "adam_step",
    "spate_gan_objective", "objective_terms", "train",
    "__version__",
]
