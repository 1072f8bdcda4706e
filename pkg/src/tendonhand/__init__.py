"""Kinematics and mechanism design for a tendon-driven rolling-joint hand."""

__version__ = "0.1.0"

from .hand_model import HandSpec, JointLimits, JointState, default_hand_spec, load_hand_spec
from .kinematics import fk_dh, fk_planar, ik_planar, jacobian, sample_workspace, track_trajectory

__all__ = [
    "HandSpec", "JointLimits", "JointState", "default_hand_spec", "load_hand_spec",
    "fk_dh", "fk_planar", "ik_planar", "jacobian", "sample_workspace", "track_trajectory",
]
