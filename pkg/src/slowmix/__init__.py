"""Simulation and statistical verification toolkit for slowly mixing maps.

Submodules: maps (interval and baker dynamics), observables, sums (Birkhoff
and iterated sums), tower (renewal model of return times), stats, weakdep
(functional-correlation experiments), fastslow (homogenisation), experiments
(registry + thresholds), cli.
"""

__version__ = "0.1.0"
