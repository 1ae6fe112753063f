"""Estimating on/off channel statistics from sparse sensing samples."""

from .channel import ChannelModel, ChannelRealization, observe, sample_realization, transition_prob
from .errors import (BoundsNotApplicableError, EstimatorUndefinedError, McmcConvergenceError,
                     SensingError, UnidentifiableError)
from .estimation import (closed_form_uniform_estimate, estimate_theta0, estimate_u,
                         expected_uniform_estimate, log_likelihood)
from .fisher import (FisherContext, expected_fisher_series, fisher_g, fisher_information,
                     max_fisher_bound, min_fisher_bound, sparsity_alpha)
from .harness import Scenario, run_comparison, run_fisher_scan
from .schedules import (circular_beta_schedule, dp_schedule, iid_random_schedule,
                        theorem_best_schedule, uniform_schedule)
from .tracker import TrackerConfig, track
from .types import EstimateResult, ObservationTrace, SampleSchedule

__version__ = "0.1.0"
