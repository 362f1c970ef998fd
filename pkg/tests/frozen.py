"""Frozen reference values for the test suite.

Every number here was produced by the cited generator in oracles.py (run
`python3 tests/oracles.py` to regenerate) or by the closed form named in
the comment.  Do not edit by hand; if an oracle changes, regenerate and
update the freeze in the same commit.
"""

# oracles.pull_in_power2()[0]: fold of the scalar symmetric problem with
# the inverse-square nonlinearity on (0,1).  The fold parameter is flat to
# second order in the midpoint, so lam is good to ~1e-12 ...
PULL_IN_POWER2 = 1.4000164773711368

# ... while the midpoint location itself is only good to ~1e-6.
FOLD_MIDPOINT_POWER2 = 0.3883466237262035

# oracles.branch_midpoints_power2(lam): peak values of the two steady
# profiles (minimal branch, second branch) of the continuum problem.
MINIMAL_PEAK_POWER2 = {1.0: 0.1699833682560947, 1.2: 0.2308827363961826}
SECOND_PEAK_POWER2 = {1.0: 0.6510386216758615, 1.2: 0.5671112061654364}
