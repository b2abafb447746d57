"""Top eigenvalue of entrywise-transformed spiked Wigner matrices.

Modules: ``noise`` (entry laws and quadrature), ``transform`` (entrywise maps
and their functionals), ``ensemble`` (samplers and auxiliary matrices),
``spectra`` (eigensolvers, resolvents, vector equation), ``theory`` (limit
laws and the Tracy-Widom table), ``experiment`` (Monte Carlo engine) and
``validation`` (invariant suites).
"""

from . import ensemble, experiment, noise, spectra, theory, transform, validation

__version__ = "0.1.0"

__all__ = ["ensemble", "experiment", "noise", "spectra", "theory", "transform", "validation"]
