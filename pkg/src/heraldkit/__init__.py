"""Heralded single-photon source design toolkit."""
__version__ = "0.1.0"
