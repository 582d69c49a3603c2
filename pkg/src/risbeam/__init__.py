"""RIS-assisted array radar beamforming codesign.

Joint optimization of transmit weights, receive weights and unimodular RIS
reflection coefficients for output-SINR maximization, built around a
diagonally-loaded Riemannian Newton solver for the Dinkelbach subproblems.
"""

from .codesign import (CodesignConfig, SolveReport, codesign,
                       codesign_random_ris, initial_state, optimize_ris,
                       update_receive, update_transmit)
from .errors import (BudgetExceededError, ConfigError, MonotonicityViolation,
                     ZeroElementError)
from .scene import (ArrayGeometry, BeamformerState, ChannelParams, Scene,
                    beampattern, compose_phi, default_scene, draw_channel,
                    empty_channel, load_scene, output_sinr, output_sinr_db,
                    path_loss, ris_free, scene_from_dict, steering_radar,
                    steering_ris)
from .uqp import (ChannelTerms, InnerSolveTrace, RnmConfig, UqpProblem,
                  build_channel_terms, build_uqp, dinkelbach_z, improved_rnd,
                  newton_system, rcg_solve, rgd_solve, rnm_solve)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry", "BeamformerState", "BudgetExceededError", "ChannelParams",
    "ChannelTerms", "CodesignConfig", "ConfigError", "InnerSolveTrace",
    "MonotonicityViolation", "RnmConfig", "Scene", "SolveReport", "UqpProblem",
    "ZeroElementError", "beampattern", "build_channel_terms", "build_uqp",
    "codesign", "codesign_random_ris", "compose_phi", "default_scene",
    "dinkelbach_z", "draw_channel", "empty_channel", "improved_rnd",
    "initial_state", "load_scene", "newton_system", "optimize_ris",
    "output_sinr", "output_sinr_db", "path_loss", "rcg_solve", "rgd_solve",
    "ris_free", "rnm_solve", "scene_from_dict", "steering_radar",
    "steering_ris", "update_receive", "update_transmit",
]
