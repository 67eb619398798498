"""Secret-sharing capacities and layered secrecy regions for noisy broadcast channels."""

__version__ = "0.1.0"
