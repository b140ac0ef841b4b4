"""Linear multiuser detection with Gaussian belief propagation."""
from .detectors import (ETA, Detection, DetectorSpec, dense_oracle, detect, detect_decorrelator,
                        detect_mf, detect_mmse, detect_pseudoinverse)
from .diagnostics import (DiagnosticsReport, check_diagonal_dominance, diagnose,
                          noise_threshold_check, regularize_dd, walk_summability_check)
from .gabp import (MessageState, SolveResult, SolverConfig, SolverError, ZeroDiagonalError,
                   decide, infer, initialize, iterate_once, run)
from .matrix import SparseSymmetricMatrix, build_augmented, build_augmented_rhs
from .montanari import (MontanariState, NotationMap, lockstep, montanari_infer,
                        montanari_iterate, translate_messages)
from .simulator import (Scenario, TrialRecord, generate_scenario, jacobi_baseline,
                        message_accounting, run_trials)

__version__ = "0.1.0"
