"""Adaptive-rate compressive reconstruction of sparse signal sequences.

Submodules:

``bounds``
    closed-form measurement bounds and quality parameters
``solver``
    basis pursuit and l1-l1 minimization (ADMM with vertex polishing)
``sensing``
    Gaussian sensing operators and measurement helpers
``motion``
    half-pel block matching and motion-compensated extrapolation
``online``
    the adaptive-rate reconstruction loop
``pipeline``
    background subtraction, synthetic data, phase harness, CSV and CLI
"""

from .bounds import (BoundResult, QualityParams, cs_bound, l1l1_bound, noisy_scale,
                     quality_params, success_probability)
from .online import OnlineConfig, OnlineState, StepRecord, run_sequence
from .sensing import SensingOperator, gaussian_operator, measure
from .solver import SolveReport, SolveSettings, basis_pursuit, l1l1_min, l1l1_min_noisy

__version__ = "0.1.0"

__all__ = [
    "BoundResult", "OnlineConfig", "OnlineState", "QualityParams", "SensingOperator",
    "SolveReport", "SolveSettings", "StepRecord", "basis_pursuit", "cs_bound",
    "gaussian_operator", "l1l1_bound", "l1l1_min", "l1l1_min_noisy", "measure",
    "noisy_scale", "quality_params", "run_sequence", "success_probability",
]
