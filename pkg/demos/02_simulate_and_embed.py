"""Signal-to-point-cloud walkthrough.

Simulates the tool vibration at one stable and one chattering grid point,
adds measurement noise, picks embedding parameters (permutation entropy for
the delay, false nearest neighbors for the dimension), and embeds the signals
into point clouds.

Run:  python3 demos/02_simulate_and_embed.py
Writes demos/output/cloud_{stable,chatter}.csv
"""

from pathlib import Path

import numpy as np

from topomill import (EmbeddingParams, GridPoint, ProcessParams, SimConfig,
                      add_noise, build_monodromy, select_delay,
                      select_dimension, simulate, subsample_cloud,
                      takens_embed)
from topomill.config import DEFAULT_PROCESS

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

process = ProcessParams(**DEFAULT_PROCESS)
cases = {"stable": GridPoint(7000.0, 0.0012), "chatter": GridPoint(7000.0, 0.0040)}
cfg = SimConfig()

for name, gp in cases.items():
    rho = build_monodromy(process, gp, order=160).spectral_radius
    ts = simulate(process, gp, cfg)
    print(f"{name}: {gp.spindle_speed:.0f} rpm, {gp.depth_of_cut * 1e3:.1f} mm, "
          f"|multiplier| = {rho:.3f}, saturated = {ts.saturated}")
    print(f"  retained {ts.samples.size} samples at {ts.sample_interval * 1e6:.1f} us, "
          f"peak |x| = {np.abs(ts.samples).max():.2e} m")

    noisy = add_noise(ts, snr_db=25.0, seed=11)
    delay = select_delay(noisy, max_delay=32)
    dimension = select_dimension(noisy, delay)
    print(f"  embedding delay = {delay} samples, dimension = {dimension}")

    cloud = takens_embed(noisy, EmbeddingParams(delay, dimension))
    cloud = subsample_cloud(cloud, 80)
    extent = cloud.points.max(axis=0) - cloud.points.min(axis=0)
    print(f"  cloud: {cloud.points.shape[0]} points in R^{dimension}, "
          f"extent {np.max(extent):.2e} m")
    np.savetxt(OUT / f"cloud_{name}.csv", cloud.points, delimiter=",", fmt="%.8e")
    print(f"  wrote {OUT / f'cloud_{name}.csv'}")
