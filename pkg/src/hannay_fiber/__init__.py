"""Hannay angles of nonlinear polarization dynamics in composite optical fibers."""

__version__ = "0.1.0"
