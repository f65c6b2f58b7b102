"""Linear bandit simulation and design-matrix spectrum diagnostics."""

from .actionspace import (Ellipsoid, FiniteSet, PNormBall, UnitSphere, check_disjoint_eps_sets,
                          eps_optimal_contains, lch_local_ellipsoid, linear_argmax, perturbation_alpha_sphere,
                          sample_uniform, ucb_argmax)
from .bandit import BanditInstance, ConfidenceSet, DesignState, confidence_radius, run_episode, update_design
from .clustering import cluster_threshold, edge_cluster, run_multi_agent_clustering
from .linalg import davis_kahan_check, eig_sym, matrix_azuma_tail, trust_region_max_norm, weyl_check
from .model_selection import alb_run, epoch_schedule, refine_norm_estimate
from .policies import OFUL, Greedy, LinTS, PolicyConfig, Uniform
from .spectral import (SpectralTrace, alignment_check, ensemble_band, eps_fraction, exponent_estimate,
                       highprob_reference, kl_quadratic_lhs, mc_expected_design, pinsker_bound)

__version__ = "0.1.0"
