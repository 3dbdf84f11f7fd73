"""Finitely parameterized networks on function spaces via Hilbert-cube encodings."""

from .activation import Componentwise, GateSpec, RankOne, apply, check_separating, lipschitz_bound, rank_one
from .embed import (
    ConvexPreserving,
    FunctionSample,
    LinearFunctional,
    MetricLandmark,
    Normalizer,
    PointEval,
    encode,
    pseudometric,
    tail_bound,
    verify_cube,
)
from .net import ScalarNet, VectorNet, forward_scalar, forward_vector, project_params
from .quantize import BorelNet, Codebook, build_codebook, metric_project, predict_borel
from .realize import ext1, ext2, ext3, realize, stability_check
from .train import TrainConfig, fd_check, fit, grad, loss_mse

__version__ = "0.1.0"
