"""Solver for third-order periodic boundary value problems y''' = F(t, y, y', y'') on [0, 1]
with a reproducing-kernel collocation basis."""

__version__ = "1.0.0"
