"""Shortcut-to-adiabaticity trap ramps for a Tonks-Girardeau gas.

Ramps are designed from the quintic mean-field description and verified by
propagating both the mean field and the exact N-orbital representation.
"""
__version__ = "0.1.0"
