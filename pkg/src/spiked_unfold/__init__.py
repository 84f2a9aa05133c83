"""Rank-one spiked tensor recovery by unfolding PCA, with the matching
phase-transition theory for long random matrices and a Monte Carlo
validation harness."""

from .bbp import (BbpPrediction, BracketExhaustedError, ResolventTriple,
                  beta_hat, critical_snr, empirical_resolvent,
                  master_equation_root, predict)
from .harness import (AggregateRow, AxisObservation, SpectrumHistogram,
                      SpikedMatrixModel, SweepConfig, TrialRecord, aggregate,
                      run_matrix_sweep, run_tensor_sweep, spectrum_histogram)
from .linalg import (MatrixFreeOperator, NonConvergenceError,
                     ShiftInsideSpectrumError, SingularTriple,
                     SpectralSummary, dense_spectral_summary,
                     full_singular_values, gram, shifted_gram_solve,
                     top_singular_triple)
from .mplaw import (MpLaw, mp_density, mp_quantile, mp_tail_mass,
                    predicted_singular_locations, singular_density, stieltjes)
from .plots import PlotSpec, Series, render
from .tensors import (AxisConvergenceError, AxisEstimate, SpikedTensorModel,
                      axis_unfold_operator, normalized_unfold,
                      sample_spiked_tensor, tensor_critical_beta, unfold,
                      unfolding_ratio, unfolding_recovery, vec_kron)

__version__ = "0.1.0"
