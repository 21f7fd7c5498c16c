"""The on-disk workflow: simulate to files, extract from files, score.

Everything the command line does is plain functions; this script runs
the same chain through the Python API, then shows the equivalent shell
commands.
"""

import tempfile
from pathlib import Path

from trajex.cli import main
from trajex.io import read_detections, read_ground_track, read_metrics

workdir = Path(tempfile.mkdtemp(prefix="trajex_demo_"))
scene = workdir / "scene"
result = workdir / "result"

# 1. Render a noisy synthetic trial to the three input files.
main([
    "simulate", "--scenario", "ugv_red", "--seed", "1",
    "--set", "sim.pixel_sigma=1.0", "--set", "sim.dropout=0.05",
    "--out-dir", str(scene),
])

# 2. Peek at the streams: whitespace text, one frame per line.
dets = read_detections(scene / "detections.txt")
print(f"\n{len(dets)} detection frames, first three lines:")
for line in (scene / "detections.txt").read_text().splitlines()[:3]:
    print(f"  {line}")

# 3. Extract the trajectory from those files alone.
main([
    "extract",
    "--detections", str(scene / "detections.txt"),
    "--poses", str(scene / "poses.txt"),
    "--out-dir", str(result),
])

# 4. Score by hand against the simulated truth.
track = read_ground_track(result / "ground_track.txt")
truth = read_ground_track(scene / "truth.txt")
print(f"\nextracted {len(track)} track points; "
      f"truth ends at ({truth.xy[-1][0]:.2f}, {truth.xy[-1][1]:.2f}), "
      f"extraction ends at ({track.xy[-1][0]:.2f}, {track.xy[-1][1]:.2f})")

# 5. Or let eval do simulate + extract + score in one go.
trial = workdir / "trial"
main([
    "eval", "--scenario", "ugv_red", "--seed", "1",
    "--set", "sim.pixel_sigma=1.0", "--set", "sim.dropout=0.05",
    "--out-dir", str(trial),
])
metrics = read_metrics(trial / "metrics.txt")
print(f"\neval metrics: final error {metrics.final_goal_error_m:.3f} m, "
      f"success {metrics.success}")

print(f"""
equivalent shell session:
  trajex simulate --scenario ugv_red --seed 1 --set sim.pixel_sigma=1.0 --out-dir scene
  trajex extract --detections scene/detections.txt --poses scene/poses.txt --out-dir result
  trajex eval --scenario ugv_red --seed 1 --set sim.pixel_sigma=1.0 --out-dir trial
  trajex batch --seeds 10 --csv trials.csv
  trajex plot-csv --in result/ground_track.txt --reference scene/truth.txt --out plot.csv

files left in {workdir}""")
