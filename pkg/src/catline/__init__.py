"""Kerr-cat qubit stabilization and collision-model homogenization."""

from .classifier import Decision, classify, classify_reservoirs
from .collision import (
    CollisionParams,
    CollisionTrace,
    ReservoirSpec,
    collide_once,
    detect_steady_state,
    joint_hamiltonian,
    prepare_unit,
    run_collisions,
)
from .dynamics import DriveSchedule, SystemParams, Trajectory, evolve, kerr_cat_hamiltonian
from .errors import (
    CatlineError,
    ConfigError,
    DegenerateStateError,
    DimensionError,
    NumericalFailure,
    StepSizeError,
    TruncationError,
)
from .operators import (
    DensityMatrix,
    Operator,
    SpaceLayout,
    annihilation,
    commutator,
    creation,
    expectation,
    identity,
    number,
    partial_trace,
    tensor,
)
from .states import (
    CatBasis,
    Ket,
    bloch_vector,
    cat,
    cat_basis,
    coherent,
    fidelity,
    fock,
    logical_state,
    plus_state,
    auto_dim,
    required_dim,
)

__version__ = "0.1.0"
