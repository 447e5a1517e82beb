# %% [markdown]
# # CLI runs and the final-step convention
# Run a preset through the CLI, then compare q(0) with the state one Euler
# step earlier. The published histogram means for the interrupted runs sit
# closer to the latter.

# %%
import csv
import subprocess
import sys
import tempfile
from pathlib import Path

out = Path(tempfile.mkdtemp()) / "fig9"
subprocess.run([sys.executable, "-m", "cfglab", "run", "--preset", "fig9_interrupted_hist", "--smoke",
                "--out", str(out)], check=True)
with open(out / "summary.csv") as fh:
    for row in csv.reader(fh):
        print(row)

# %%
from cfglab.cli import build_plan, derive_seed
from cfglab.presets import get_preset
from cfglab.sampler import simulate

for run in get_preset("fig9_interrupted_hist").build()["runs"]:
    run = dict(run, n_traj=50_000, schedule={"t_f": 5.0, "steps": 500, "record_stride": 1})
    e = simulate(build_plan(run, derive_seed(12345, run["name"])))
    last, prev = e.q_values[:, -1], e.q_values[:, -2]
    print(f"{run['name']:10s}  q(0): {last.mean():.3f}/{last.std(ddof=1):.3f}"
          f"   q(dt): {prev.mean():.3f}/{prev.std(ddof=1):.3f}")
