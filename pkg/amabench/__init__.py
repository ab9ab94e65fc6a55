"""Inexact AMA/FAMA splitting library and distributed-MPC benchmark."""

__version__ = "1.0.0"
