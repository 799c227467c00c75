"""
Comparing replay variants across seeds
======================================

Sweeps two seeds for each variant on the point-mass task and prints the
aggregate table: mean evaluation return over seeds and evaluation points,
the across-seed std averaged over points, and the time to reach a target.
"""

import tempfile
from pathlib import Path

from ere_sac import TrainConfig, format_report, report, sweep

base = Path(tempfile.mkdtemp(prefix="ere_sac_sweep_"))
runs = []
for variant in ("uniform", "ere", "per", "ere_per"):
    template = TrainConfig(env="point_mass", variant=variant, hidden=(32, 32), batch_size=64,
                           total_timesteps=3000, warmup_steps=400, eval_interval=1000, eval_episodes=3,
                           buffer_capacity=5000, c_min=250)
    results = sweep(template, [0, 1], base_dir=base / variant)
    runs += [p for p in results.values() if isinstance(p, Path)]

# %%
print(format_report(report(runs, target=-20.0)))
