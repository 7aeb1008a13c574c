"""qlll: constructive preparation of zero-energy states of commuting
k-local projector Hamiltonians by coherent resampling, with the
information-theoretic run-time analysis verified exactly on small
instances."""

from .analysis import (
    BoundReport,
    EnumCode,
    choose_N,
    code_length_bound,
    margin_bits,
    rank_bitstring,
    success_bound,
    unrank,
    verify_termination_bound,
)
from .errors import InvariantViolation, NodeCapExceeded
from .instance import (
    LocalProjector,
    QsatInstance,
    ValidationReport,
    from_dimacs,
    gen_random_instance,
    instance_from_obj,
    instance_to_obj,
    lll_margin,
    neighborhood,
    qubit_degree_condition,
    to_dimacs,
    validate_instance,
)
from .rng import ALGORITHM_ID, RandomStream, split_seed
from .scheduler import (
    TERMINATED,
    MoserSchedule,
    StackMachine,
    machine_next,
    next_measurement,
    schedule_equiv,
    stack_step,
)
from .simulator import (
    Diagonalizer,
    MeasurementBranches,
    StateVector,
    apply_local_unitary,
    coherent_measure,
    diagonalizer,
    energy,
    resample,
)
from .solver import (
    ExecutionLog,
    HistoryLeaf,
    HistoryTree,
    RunParams,
    RunStatus,
    TrajectoryResult,
    enumerate_histories,
    run_trajectory,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHM_ID",
    "BoundReport",
    "Diagonalizer",
    "EnumCode",
    "ExecutionLog",
    "HistoryLeaf",
    "HistoryTree",
    "InvariantViolation",
    "LocalProjector",
    "MeasurementBranches",
    "MoserSchedule",
    "NodeCapExceeded",
    "QsatInstance",
    "RandomStream",
    "RunParams",
    "RunStatus",
    "StackMachine",
    "StateVector",
    "TERMINATED",
    "TrajectoryResult",
    "ValidationReport",
    "apply_local_unitary",
    "choose_N",
    "code_length_bound",
    "coherent_measure",
    "diagonalizer",
    "energy",
    "enumerate_histories",
    "from_dimacs",
    "gen_random_instance",
    "instance_from_obj",
    "instance_to_obj",
    "lll_margin",
    "machine_next",
    "margin_bits",
    "neighborhood",
    "next_measurement",
    "qubit_degree_condition",
    "rank_bitstring",
    "resample",
    "run_trajectory",
    "schedule_equiv",
    "solve",
    "split_seed",
    "stack_step",
    "success_bound",
    "to_dimacs",
    "unrank",
    "validate_instance",
    "verify_termination_bound",
]
