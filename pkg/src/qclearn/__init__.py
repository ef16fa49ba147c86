"""Learn unitary dilations of Markovian open-system dynamics from measurement data."""

from . import ansatz, channel, hardware, linalg, lindblad, metrics, training

__all__ = [
    "ansatz",
    "channel",
    "hardware",
    "linalg",
    "lindblad",
    "metrics",
    "training",
]

__version__ = "0.1.0"
