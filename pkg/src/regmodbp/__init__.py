"""Sparse recovery with partial support and signal-value knowledge.

The central program is reg-mod-BP: minimize the l1 norm of a candidate
signal outside a support estimate T, subject to the measurements
y = A b and a box constraint tying b on T to a prior value estimate.
The package also implements the three baselines it is compared against
(basis pursuit, modified CS, weighted l1), exact restricted isometry
and orthogonality constants by subset enumeration, the dual-certificate
machinery that decides exact recovery for a given instance, and a
reproducible Monte Carlo benchmark harness with a CLI.
"""

from . import bench, certificates, linalg, lp, models, rip, rng

__version__ = "0.1.0"

__all__ = ["bench", "certificates", "linalg", "lp", "models", "rip", "rng",
           "__version__"]
