"""Trajectory-conditioned interaction toolkit: simulation, conditioning maps,
a toy factorized video diffusion transformer and trajectory-matching metrics."""

__version__ = "0.1.0"
