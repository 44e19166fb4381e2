"""Dynamic regret under decaying drift with the doubling schedule.

Run from the repository root::

    python demos/regret_study.py [runs]
"""

import sys

from geotrack import Drift, KarcherInstance, averaged_study, make_doubling_schedule, regret_checkpoints, study_constants

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 3


def schedule(c):
    return make_doubling_schedule(c, 1.0)


inst = KarcherInstance(m=3, N=10, T=2000, drift=Drift("decaying"))
trace = averaged_study(inst, schedule, runs=runs, seed=2, arms=("zeroth",), constants=study_constants(inst.d))

print(f"{'T':>5} {'Reg/T':>10} {'bound':>10} {'V_T/T':>10}")
for row in regret_checkpoints(trace, schedule, [125, 250, 500, 1000, 2000]):
    print(f"{row.T:>5} {row.reg_track / row.T:>10.4g} {row.bound_track:>10.3g} {row.VT / row.T:>10.3g}")
