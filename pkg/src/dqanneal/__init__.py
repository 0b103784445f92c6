"""Distributed quantum annealing: splitting, Trotterized telegate execution,
noise bounds and the sweep harness."""

from .evolution import (CompileError, ConvergenceError, EvolutionResult,
                        TrotterPlan, anneal_reference, compile_trotter_plan,
                        run_fault_pattern, run_trotter_ideal, run_trotter_noisy)
from .harness import (SweepConfig, SweepResult, build_comparison_models,
                      build_model, chain_partition, locate_transition,
                      run_complexity_report, run_sweep, sparse_partition,
                      toy_chain_partition, triangle_partition)
from .metrics import (BoundReport, GroundStateSpace, calibrated_convention,
                      diagonal_energies, energy_error, fidelity_gs,
                      ground_state_space, mixed_state_energy, trotter_bound)
from .noise import (BellResource, dcnot_channel, dcnot_trajectory, fit_beta,
                    measure_beta_direct, pn_beta, pn_bound)
from .partition import (DegenerateProjectionError, Partition, SplitError,
                        logical_projection, misaligned_population,
                        prepare_initial_state, split_edges, split_vertices,
                        trivial_partition)
from .problems import (IsingProblem, PauliTerm, ProblemFormatError, QubitId,
                       Schedule, generate_k4, generate_sparse_network,
                       generate_spin_chain, generate_triangle, make_problem,
                       parse_problem, serialize_problem)
from .states import DensityMatrix, StateVector

__version__ = "0.1.0"
