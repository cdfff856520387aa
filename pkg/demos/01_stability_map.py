"""Stability map walkthrough.

Labels a coarse (spindle speed, depth of cut) grid with the dominant Floquet
multiplier of the milling model and draws the resulting lobe structure as an
ASCII map: '.' stable, 'H' Hopf chatter, 'F' period-doubling chatter.

Run:  python3 demos/01_stability_map.py
Writes demos/output/stability_map.csv
"""

from pathlib import Path

from topomill import GridPoint, GridSpec, ProcessParams, build_monodromy, label_grid
from topomill.config import DEFAULT_PROCESS, DEFAULT_GRID

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

process = ProcessParams(**DEFAULT_PROCESS)
grid = GridSpec(speed_range=DEFAULT_GRID["speed_range"],
                depth_range=DEFAULT_GRID["depth_range"],
                speed_count=36, depth_count=24)

print("Labeling a 36x24 grid (a minute or so at order 100)...")
labeled = label_grid(process, grid, order=100)
print("class counts:", labeled.counts())

symbol = {"stable": ".", "hopf": "H", "period_doubling": "F",
          "undetermined": "U", "failed": "!"}
depths = grid.depths()
speeds = grid.speeds()
for j in range(len(depths) - 1, -1, -1):
    row = "".join(symbol[labeled.class3[i, j]] for i in range(len(speeds)))
    print(f"{depths[j] * 1e3:5.2f} mm  {row}")
axis = "".join("^" if i % 6 == 0 else " " for i in range(len(speeds)))
print("          " + axis)
marks = "".join(f"{speeds[i] / 1000:<6.1f}" for i in range(0, len(speeds), 6))
print("          " + marks + " krpm")

# A couple of spot checks against the map.
for speed, depth in [(7000.0, 0.001), (7000.0, 0.004)]:
    mr = build_monodromy(process, GridPoint(speed, depth), order=100)
    print(f"  {speed:.0f} rpm, {depth * 1e3:.1f} mm: |multiplier| = "
          f"{mr.spectral_radius:.3f}")

labeled.to_csv(OUT / "stability_map.csv")
print(f"wrote {OUT / 'stability_map.csv'}")
