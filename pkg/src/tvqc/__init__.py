"""Time-varying quantum channel simulation toolkit.

Models static, slow and fast time-varying decoherence channels for
multi-qubit superconducting systems, computes quantum capacities and
hashing bounds (static and ergodic), measures planar-code error
correction performance over these channels by Monte Carlo, and analyzes
decoherence-parameter measurement series.
"""

__version__ = "0.1.0"
