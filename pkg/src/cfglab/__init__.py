"""Exact-score diffusion sampling on Gaussian mixtures under classifier-free guidance."""

from .analysis import (Histogram, SummaryStats, alignment_gap, ensemble_stats, final_histogram,
                       knn_jsd, onset_time, score_diff_curve)
from .errors import NumericalError, ValidationError
from .guidance import (GuidanceKind, GuidanceSpec, guidance_term, guided_score, phi_weight,
                       regime2_inertness_bound)
from .mixture import (MixtureKind, MixtureSpec, Schedule, delta, gamma, ou_scale_and_variance,
                      speciation_time)
from .sampler import (Mode, NoiseMode, SimPlan, TrajectoryEnsemble, simulate, simulate_full,
                      simulate_projected_q, simulate_transverse)
from .scores import ScoreEval, cond_score, log_density, pair_reduction_check, score_diff, uncond_score
from .theory import (PotentialEval, ddpm_time_reparam, effective_potential, interrupted_final_mean,
                     interrupted_mean_prediction, mean_closed_form, mean_upper_bound,
                     projected_drift_regime1)

__version__ = "0.1.0"
