"""Monte-Carlo check of the two-point oracle bounds and the manifold geometry.

Run from the repository root::

    python demos/oracle_check.py
"""

from geotrack import SPD, geometry_suites, negative_control_suite, oracle_suite

for res in [oracle_suite(samples=20_000, rng=0), negative_control_suite(samples=20_000, rng=1)]:
    print(res.line())
    for label, check in res.details:
        print(f"    {label}: {check.summary()}")

for res in geometry_suites(SPD(3), rng=2, triangles=2000, samples=500):
    print(res.line())
