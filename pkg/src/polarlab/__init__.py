"""Virtual single-beam polarimetry lab for photon geometric phases."""
from .jones import RotationAxis, arg_overlap, jones_to_stokes, pauli, poincare_path, su2_rotor
from .phases import (
    ExtremaPair,
    extract_phase,
    geometric_phase_theory,
    intensity_extrema,
    intensity_model,
)
from .plates import PlateTrain, compose, simon_mukunda, u_tot_train, v_gadget

__version__ = "0.1.0"

__all__ = [
    "ExtremaPair",
    "PlateTrain",
    "RotationAxis",
    "arg_overlap",
    "compose",
    "extract_phase",
    "geometric_phase_theory",
    "intensity_extrema",
    "intensity_model",
    "jones_to_stokes",
    "pauli",
    "poincare_path",
    "simon_mukunda",
    "su2_rotor",
    "u_tot_train",
    "v_gadget",
]
