"""Desk-scale simulator of a programmable multi-port quantum photonic network.

A random unitary stands in for a multimode fibre, four phase planes around it
are designed by wavefront matching, and heralded photon pairs are routed or
swapped through the resulting linear circuit.
"""

__version__ = "0.1.0"
