"""
Training SAC with recency-weighted prioritized replay
=====================================================

A short run on the point-mass task. Each episode is followed by as many
updates as it had steps; the logged first and last window sizes show the
recency window shrinking within each phase.
"""

import sys
import tempfile

from ere_sac import TrainConfig, read_metrics, train

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 4000

# %%
out = tempfile.mkdtemp(prefix="ere_sac_demo_")
cfg = TrainConfig(env="point_mass", variant="ere_per", hidden=(32, 32), batch_size=64,
                  total_timesteps=steps, warmup_steps=400, eval_interval=1000, eval_episodes=3,
                  buffer_capacity=5000, c_min=250, output_dir=out)
run = train(cfg)

# %%
m = read_metrics(run / "metrics.csv")
print(f"{'step':>6} {'eval':>9} {'eta':>7} {'c_first':>8} {'c_last':>7}")
for t, e, eta, c0, c1 in zip(m["timestep"], m["eval_mean"], m["eta_t"], m["ck_first"], m["ck_last"]):
    print(f"{int(t):>6} {e:>9.2f} {eta:>7.4f} {int(c0):>8} {int(c1):>7}")
print("run directory:", run)
