"""
Strichartz toolkit: the torus Strichartz functional W_B, its maximization on
the L^2 sphere, the existence criterion A_B and the periodic DMNLS flow.
"""

__version__ = "1.0.0"
