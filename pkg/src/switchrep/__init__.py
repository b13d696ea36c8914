"""Replicator dynamics under Markov-switching environments.

Simulation of the hybrid flow (deterministic replicator selection inside
each environment, Markov jumps between environments), Monte Carlo
estimation of fixation and escape statistics, and construction plus
numerical audit of power-function Lyapunov certificates for stability and
instability in probability of the monomorphic equilibria.
"""

from .ensemble import (EnsembleReport, RunRecord, StartRegion, estimate_escape,
                       estimate_fixation, fixed_start, interior_start,
                       stability_curve, vertex_ball)
from .errors import (AbsorbingStateError, DegenerateLeaderError,
                     ModelValidationError, NonFiniteStateError, NumericalError,
                     PoleEvaluationError, ReducibleGeneratorError,
                     ResidualTooLargeError, StepTooLargeError, SwitchrepError)
from .hybrid import (HybridTrajectory, OutcomeLabel, classify_outcome, simulate)
from .model import (ConstantGenerator, FitnessLandscape, GeneratorSpec,
                    ModelSpec, SimplexState, StateDependentGenerator,
                    ValidationReport, validate_model)
from .regimes import (JumpSample, StationaryDistribution, sample_jump,
                      stationary_distribution, step_state_dependent)
from .replicator import (FixedEnvTrajectory, average_fitness,
                         fixed_env_equilibria, integrate_fixed_env,
                         vector_field)
from .stability import (Degenerate, MeanFitnessReport, PartitionMap,
                        StabilityCertificate, VerificationReport,
                        build_instability_certificate,
                        build_stability_certificate, certificate_value,
                        leading_genotype, lie_derivative,
                        local_leader_heuristic, mean_fitness,
                        mean_fitness_report, partition_sweep,
                        reduced_vector_field, verify_certificate)

__version__ = "0.1.0"

__all__ = [
    "AbsorbingStateError", "ConstantGenerator", "Degenerate",
    "DegenerateLeaderError", "EnsembleReport", "FitnessLandscape",
    "FixedEnvTrajectory", "GeneratorSpec", "HybridTrajectory", "JumpSample",
    "MeanFitnessReport", "ModelSpec", "ModelValidationError",
    "NonFiniteStateError", "NumericalError", "OutcomeLabel", "PartitionMap",
    "PoleEvaluationError", "ReducibleGeneratorError", "ResidualTooLargeError",
    "RunRecord", "SimplexState", "StabilityCertificate", "StartRegion",
    "StateDependentGenerator", "StationaryDistribution", "StepTooLargeError",
    "SwitchrepError", "ValidationReport", "VerificationReport",
    "average_fitness", "build_instability_certificate",
    "build_stability_certificate", "certificate_value", "classify_outcome",
    "estimate_escape", "estimate_fixation", "fixed_env_equilibria",
    "fixed_start", "integrate_fixed_env", "interior_start", "leading_genotype",
    "lie_derivative", "local_leader_heuristic", "mean_fitness",
    "mean_fitness_report", "partition_sweep", "reduced_vector_field",
    "sample_jump", "simulate", "stability_curve", "stationary_distribution",
    "step_state_dependent", "validate_model", "vector_field", "vertex_ball",
    "verify_certificate",
]
