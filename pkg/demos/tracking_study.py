"""Averaged Karcher tracking for two problem sizes, with an SVG of the error curves.

Run from the repository root::

    python demos/tracking_study.py [runs] [T]
"""

import sys
from pathlib import Path

from geotrack import KarcherInstance, averaged_study, log_plot_svg, optimal_schedule, study_constants

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 4
T = int(sys.argv[2]) if len(sys.argv) > 2 else 1000
out = Path("demo_output")
out.mkdir(exist_ok=True)

series = []
for m in (3, 9):
    inst = KarcherInstance(m=m, N=10, T=T)
    trace = averaged_study(inst, optimal_schedule, runs=runs, seed=1, constants=study_constants(inst.d))
    for name in ("zeroth", "first"):
        arm = trace[name]
        series.append((f"m={m} {name}", arm.k, arm.e_mean))
        print(f"m={m:<2} {name:<6} tail mean e = {arm.tail_mean():.4g}   Delta = {trace.Delta:.4g}")
    if trace.flagged:
        print(f"  runs {trace.flagged} broke the declared delta/V bounds")

svg = log_plot_svg(series, title="mean tracking error", xlabel="k", ylabel="e_k")
(out / "tracking_error.svg").write_text(svg, encoding="utf-8")
print(f"wrote {out / 'tracking_error.svg'}")
