"""Joint design of a semantic communication link and target sensing beams
under a hybrid Cramer-Rao bound with synchronisation error."""

from .distortion import LogisticDistortionModel, ModelBank, fit_logistic
from .driver import ExperimentConfig, SolveReport, baseline_wf_zf, self_check, solve_issc, sweep
from .geometry import Scene
from .link import BeamPair

__all__ = [
    "BeamPair", "ExperimentConfig", "LogisticDistortionModel", "ModelBank", "Scene", "SolveReport",
    "baseline_wf_zf", "fit_logistic", "self_check", "solve_issc", "sweep",
]
