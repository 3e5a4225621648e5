"""Numerical tests of tunneling asymptotics for Dolbeault Laplacians on the torus."""

__version__ = "0.1.0"
