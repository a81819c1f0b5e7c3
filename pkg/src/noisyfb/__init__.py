"""Bounds on achievable rates of Gaussian channels with noisy linear feedback."""

from .bounds import BoundKind, BoundResult, compute_bound, open_loop_capacity
from .channel import ChannelSpec, ma1_covariance, toeplitz_covariance, white_covariance
from .info import CodingScheme
from .maxdet import MaxDetInstance, SolveReport, Status, VarLayout, solve

__all__ = [
    "BoundKind",
    "BoundResult",
    "ChannelSpec",
    "CodingScheme",
    "MaxDetInstance",
    "SolveReport",
    "Status",
    "VarLayout",
    "compute_bound",
    "ma1_covariance",
    "open_loop_capacity",
    "solve",
    "toeplitz_covariance",
    "white_covariance",
]
