"""Von Neumann vs Schrodingerist thermal ensembles, the wavefunction-energy
term, and the case-I/case-II boundary in small enantiomer and magnet models."""

__version__ = "0.1.0"

from .analysis import (
    CaseClassification,
    GroundStateResult,
    MinimizerConfig,
    Verdict,
    classify_case,
    conversion_fraction_stats,
    critical_w,
    ground_state_search,
    locate_boundary,
    magnetization_scan,
    optical_rotation_stats,
)
from .errors import CapacityError, ContractViolation, ValidationError
from .hilbert import EigenSystem, HermitianOperator, StateVector, eigendecompose, expectation
from .models import (
    CurieWeissModel,
    EnantiomerModel,
    WfeSpec,
    build_curie_weiss,
    build_enantiomer,
    total_energy,
    wfe_energy,
)
from .ste import (
    Augmented,
    ComDispersion,
    EnsembleEstimate,
    HermitianExpectation,
    Linear,
    ProjectionWeight,
    SamplerConfig,
    ensemble_histogram,
    sample_sphere_uniform,
    ste_expectation,
    ste_quadrature_2d,
)
from .vnte import ThermalParams, vnte_expectation, vnte_partition
