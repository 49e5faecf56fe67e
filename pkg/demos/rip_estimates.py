"""Probing how close a measurement operator is to a rank-restricted
isometry.

Monte Carlo sampling of unit-norm low-rank matrices gives lower bounds
on the isometry constants (certifying upper bounds is intractable).
Gaussian ensembles concentrate near isometry as p grows; entry sampling
does not, which is why completion guarantees are empirical.  Also shows
the octave-band spectral profile and the iteration cap it implies.
"""

import numpy as np

from admira import (
    GaussianOperator,
    SamplingOperator,
    check_isometry_inequalities,
    estimate_delta_profile,
    iteration_bound,
    profile,
)


def main():
    m = n = 10
    for p in (200, 800, 3200):
        op = GaussianOperator(m, n, p, seed=0)
        chain = estimate_delta_profile(op, r_max=3, trials=300, seed=1)
        bounds = ", ".join(f"r={e.r}: {e.delta_lower:.3f}" for e in chain)
        print(f"gaussian p={p:5d}: delta lower bounds  {bounds}")

    samp = SamplingOperator.random(m, n, 60, seed=2)
    chain = estimate_delta_profile(samp, r_max=3, trials=300, seed=1)
    bounds = ", ".join(f"r={e.r}: {e.delta_lower:.3f}" for e in chain)
    print(f"sampling p=60:    delta lower bounds  {bounds}  (not an isometry)")

    op = GaussianOperator(m, n, 800, seed=0)
    records = check_isometry_inequalities(op, r=2, trials=100, seed=3)
    bad = sum(not rec["consistent"] for rec in records)
    print(f"\ninequality consistency checks: {len(records)} records, "
          f"{bad} inconsistent")

    rng = np.random.default_rng(4)
    X = rng.standard_normal((12, 4)) @ np.diag([8.0, 4.0, 1.0, 0.9]) @ \
        rng.standard_normal((4, 12))
    prof = profile(X)
    print(f"\nspectral profile: {prof.t} occupied octave bands over rank "
          f"{prof.rank} -> iteration cap {iteration_bound(prof.rank, prof.t):.1f}")


if __name__ == "__main__":
    main()
