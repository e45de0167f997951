"""Spatial channel covariance estimation for hybrid arrays via tensor decomposition."""

from .acquisition import ConfigurationError, HybridCombiner, NumericalError, draw_rf_combiner, measure, whitened_combiner
from .aoa import AoaEstimate, RootFindingError, recover_aoa, recover_aoas
from .baselines import build_dictionary, music_estimate, sample_covariance_y, somp_estimate
from .channel import ChannelScene, ClusterConfig, SceneConfig, array_response, channel_tensor, draw_scene, snr_to_sigma
from .covariance import aoa_mse, reconstruct_covariance, rpe, rpe_lower_bound, true_covariance
from .cpd import AlsOptions, cpd_als
from .crlb import DegenerateSceneError, NotApplicableError, crlb_phi, fim_blocks, log_likelihood, music_crlb
from .estimator import CovarianceEstimate, estimate_covariance
from .tensor import DimensionError, FactorTriple, fold, from_factors, khatri_rao, unfold

__version__ = "0.1.0"
