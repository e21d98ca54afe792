"""Capon beamforming with a mainlobe-to-sidelobe power ratio regulariser."""

__version__ = "0.1.0"

from .beamformers import (
    MsprConfig,
    MsprSolveReport,
    SingularMatrixError,
    WeightVector,
    beamformer_output,
    capon_weights,
    lagrangian_gradient,
    mspr_objective,
    mspr_solve,
    mspr_step,
)
from .manifold import (
    AngleGrid,
    ArrayGeometry,
    DomainError,
    Manifold,
    ManifoldPartition,
    build_manifold,
    partition_manifold,
    steering_vector,
)
from .metrics import (
    BeamPattern,
    CampaignConfig,
    CampaignResult,
    beam_pattern,
    run_campaign,
    sinr_db,
)
from .scene import (
    CovarianceMatrix,
    Interferer,
    Scene,
    SnapshotBatch,
    analytic_covariance,
    generate_snapshots,
    sample_covariance,
)
