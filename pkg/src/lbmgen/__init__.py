"""Lattice Boltzmann collision-operator compiler.

Derives collision rules symbolically, minimizes their operation count,
lowers them to stencil kernels under several streaming patterns, emits C
source and runs them in a numpy reference simulator.
"""

__version__ = "0.1.0"
