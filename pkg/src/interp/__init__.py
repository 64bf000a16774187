"""Interpolating estimators for noisy overparameterized linear regression."""

__version__ = "0.1.0"
