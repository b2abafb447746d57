"""Structural diagnostics behind the limit laws.

The proof strategy replaces the transformed matrix by a second-order Taylor
surrogate H = V + A, where V is a Wigner-type noise matrix and A a rank-2
spike with closed-form eigenvalues.  Each piece is checkable numerically.
"""

from spiked_wigner import validation

for suite, kwargs in (
    ("rank2", {"asym_draws": 50}),
    ("interpolation", {"N": 128, "draws": 6}),
    ("qve", {}),
    ("approximation-gap", {"Ns": (128, 256, 512), "trials": 40}),
    ("local-law", {"Ns": (128, 256, 512), "draws": 2}),
):
    print(validation.run_suite(suite, **kwargs).report())
    print()
