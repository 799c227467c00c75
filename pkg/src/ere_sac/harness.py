"""Training loop for the four replay variants, multi-seed sweeps, reporting and analytics."""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .agent import SacAgent, SacConfig, TrainingDiverged
from .envs import make_env
from .ere import EreConfig, anneal_eta, expected_sample_counts, range_schedule, sampling_range
from .per import PriorityTree, normalized_is_weights, sample_proportional_range
from .replay import ReplayBuffer

log = logging.getLogger(__name__)

VARIANTS = ("uniform", "ere", "per", "ere_per")
METRICS_HEADER = [
    "timestep", "episode", "train_return", "eval_mean", "eval_std",
    "v_loss", "q1_loss", "q2_loss", "pi_loss", "eta_t", "ck_first", "ck_last", "wall_ms",
]


@dataclass
class TrainConfig:
    env: str = "pendulum"
    variant: str = "uniform"
    total_timesteps: int = 30_000
    buffer_capacity: int = 100_000
    batch_size: int = 256
    lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    alpha: float = 0.2
    hidden: tuple = (256, 256)
    eta0: float = 0.996
    etaT: float = 1.0
    c_min: int = 5000
    exponent_scale: int = 1000
    uniform_first_update: bool = False
    anneal_eta: bool = True
    reverse_ere_order: bool = False
    beta1: float = 0.6
    beta2: float = 0.6
    epsilon: float = 1e-4
    anneal_beta2: bool = False
    weight_all_losses: bool = True
    warmup_steps: int = 1000
    eval_interval: int = 5000
    eval_episodes: int = 5
    seed: int = 0
    output_dir: str = "runs/run"
    record_wall_ms: bool = True

    def __post_init__(self):
        self.hidden = _parse_hidden(self.hidden)
        self.validate()

    def validate(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        make_env(self.env)
        for name in ("total_timesteps", "buffer_capacity", "batch_size", "eval_interval"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.eval_episodes < 0 or self.warmup_steps < 0:
            raise ValueError("eval_episodes and warmup_steps must be non-negative")
        if self.warmup_steps < self.batch_size:
            raise ValueError("warmup_steps must be >= batch_size so every update has a full batch to draw from")
        # the sub-configs validate variant-irrelevant fields as well
        self.ere_config()
        self.sac_config()
        if self.beta1 < 0 or self.beta2 < 0 or not self.epsilon > 0:
            raise ValueError("need beta1, beta2 >= 0 and epsilon > 0")

    def ere_config(self) -> EreConfig:
        return EreConfig(self.buffer_capacity, self.eta0, self.etaT, min(self.c_min, self.buffer_capacity),
                         self.exponent_scale, self.uniform_first_update)

    def sac_config(self) -> SacConfig:
        return SacConfig(self.hidden, self.lr, self.gamma, self.tau, self.alpha, self.weight_all_losses)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, **overrides) -> "TrainConfig":
        values = parse_key_values(text)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**coerce_fields(values))

    @classmethod
    def from_file(cls, path, **overrides) -> "TrainConfig":
        return cls.from_text(Path(path).read_text(), **overrides)


def _parse_hidden(v):
    if isinstance(v, str):
        v = [x for x in v.replace(" ", "").split(",") if x]
    return tuple(int(x) for x in v)


def parse_key_values(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _to_bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def coerce_fields(values: dict) -> dict:
    known = {f.name: f for f in fields(TrainConfig)}
    unknown = set(values) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for k, v in values.items():
        default = known[k].default
        if isinstance(default, bool):
            out[k] = _to_bool(v)
        elif isinstance(default, int):
            out[k] = int(float(v)) if isinstance(v, str) else int(v)
        elif isinstance(default, float):
            out[k] = float(v)
        elif isinstance(default, tuple):
            out[k] = _parse_hidden(v)
        else:
            out[k] = str(v)
    return out


@dataclass
class MetricsRecord:
    timestep: int
    episode: int
    train_return: float
    eval_mean: float
    eval_std: float
    v_loss: float
    q1_loss: float
    q2_loss: float
    pi_loss: float
    eta_t: float
    ck_first: int
    ck_last: int
    wall_ms: int

    def row(self):
        return [getattr(self, k) for k in METRICS_HEADER]


def evaluate(agent: SacAgent, env, episodes: int, rng: np.random.Generator) -> np.ndarray:
    """Returns of deterministic-policy episodes on ``env``."""
    returns = []
    for _ in range(episodes):
        obs = env.reset(seed=int(rng.integers(2**32)))
        total, done, truncated = 0.0, False, False
        while not (done or truncated):
            obs, r, done, truncated = env.step(agent.act(obs, deterministic=True))
            total += r
        returns.append(total)
    return np.array(returns)


class Trainer:
    """One training run: collect an episode, then as many mini-batch updates as it had steps.

    ``on_batch(timestep, k, c_k, slots)`` is called before every update with
    the sampled slots, which is how sampling traces are inspected.
    """

    def __init__(self, config: TrainConfig, on_batch=None):
        self.cfg = config
        self.on_batch = on_batch
        streams = np.random.SeedSequence(config.seed).spawn(6)
        init_rng, self.act_rng, self.replay_rng, self.update_rng, self.env_rng, self.eval_rng = (
            np.random.default_rng(s) for s in streams
        )
        self.env = make_env(config.env)
        self.eval_env = make_env(config.env)
        spec = self.env.spec
        self.agent = SacAgent(spec.obs_dim, spec.act_dim, spec.action_limit, config.sac_config(), init_rng)
        self.buffer = ReplayBuffer(config.buffer_capacity, spec.obs_dim, spec.act_dim)
        self.ere = config.ere_config()
        self.prioritized = config.variant in ("per", "ere_per")
        self.tree = PriorityTree(config.buffer_capacity, config.beta1) if self.prioritized else None
        self.total_updates = 0
        self.phase_ranges: list[np.ndarray] = []

    def _eta(self, t):
        c = self.cfg
        return anneal_eta(c.eta0, c.etaT, t, c.total_timesteps) if c.anneal_eta else c.eta0

    def _beta2(self, t):
        c = self.cfg
        if not c.anneal_beta2:
            return c.beta2
        return c.beta2 + (1.0 - c.beta2) * min(t, c.total_timesteps) / c.total_timesteps

    def update_phase(self, t: int, K: int, eta: float):
        cfg = self.cfg
        ranges = np.empty(K, dtype=np.int64)
        sums = np.zeros(4)
        recency = cfg.variant in ("ere", "ere_per")
        for k in range(1, K + 1):
            kk = K + 1 - k if cfg.reverse_ere_order else k
            c = sampling_range(self.ere, eta, kk, K, self.buffer.size) if recency else self.buffer.size
            ranges[k - 1] = c
            if self.prioritized:
                slots, probs = sample_proportional_range(self.tree, self.buffer, c, cfg.batch_size,
                                                         self.replay_rng)
                weights = normalized_is_weights(probs, c, self._beta2(t))
            else:
                slots = self.buffer.sample_recent_range(c, cfg.batch_size, self.replay_rng)
                weights = None
            if self.on_batch is not None:
                self.on_batch(t, k, c, slots)
            res = self.agent.update(self.buffer.get(slots), weights, self.update_rng)
            if self.prioritized:
                self.tree.set_priorities(slots, res.abs_td + cfg.epsilon)
            sums += (res.v_loss, res.q1_loss, res.q2_loss, res.pi_loss)
            self.total_updates += 1
        self.phase_ranges.append(ranges)
        return sums / K, ranges

    def run(self, out_dir: Path) -> Path:
        cfg = self.cfg
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = out_dir / "metrics.csv"
        (out_dir / "config.txt").write_text(cfg.to_text())
        start = time.perf_counter()
        limit = self.env.spec.action_limit
        act_dim = self.env.spec.act_dim

        episode, K, ep_return = 0, 0, 0.0
        last_return = math.nan
        losses = np.full(4, math.nan)
        ck_first = ck_last = 0
        eta = self._eta(0)

        with open(metrics_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(METRICS_HEADER)

            def record(t):
                returns = evaluate(self.agent, self.eval_env, cfg.eval_episodes, self.eval_rng)
                mean, std = (float(returns.mean()), float(returns.std())) if len(returns) else (math.nan, math.nan)
                wall = int((time.perf_counter() - start) * 1000) if cfg.record_wall_ms else 0
                rec = MetricsRecord(t, episode, last_return, mean, std, *map(float, losses), eta,
                                    ck_first, ck_last, wall)
                writer.writerow(rec.row())
                fh.flush()
                log.info("t=%d eval_mean=%.1f", t, mean)

            record(0)
            obs = self.env.reset(seed=int(self.env_rng.integers(2**32)))
            for t in range(1, cfg.total_timesteps + 1):
                if t <= cfg.warmup_steps:
                    action = self.act_rng.uniform(-limit, limit, act_dim)
                else:
                    action = self.agent.act(obs, rng=self.act_rng)
                next_obs, reward, done, truncated = self.env.step(action)
                slot = self.buffer.add(obs, action, reward, next_obs, done)
                if self.prioritized:
                    self.tree.set_mass_for_new(slot)
                ep_return += reward
                if t > cfg.warmup_steps:
                    K += 1
                eta = self._eta(t)
                obs = next_obs
                if done or truncated or t == cfg.total_timesteps:
                    if K > 0:
                        try:
                            losses, ranges = self.update_phase(t, K, eta)
                        except FloatingPointError as exc:
                            (out_dir / "error.txt").write_text(f"timestep={t} episode={episode} {exc}\n")
                            raise
                        ck_first, ck_last = int(ranges[0]), int(ranges[-1])
                    K = 0
                    if done or truncated:
                        episode += 1
                        last_return, ep_return = ep_return, 0.0
                        obs = self.env.reset(seed=int(self.env_rng.integers(2**32)))
                if t % cfg.eval_interval == 0:
                    record(t)
        self.agent.save(out_dir / "checkpoint.bin")
        return out_dir


def train(config: TrainConfig, on_batch=None) -> Path:
    """Run one training job; returns the run directory holding metrics, config and checkpoint."""
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    return Trainer(config, on_batch).run(out)


def _train_one(config: TrainConfig):
    return train(config)


def sweep(template: TrainConfig, seeds, base_dir=None, workers: int = 1):
    """Independent runs of ``template`` that differ only in seed.

    Returns ``{seed: run_dir or exception}``; one failing seed does not stop
    the others.
    """
    seeds = [int(s) for s in seeds]
    if len(set(seeds)) != len(seeds):
        raise ValueError(f"seeds must be distinct, got {seeds}")
    base = Path(base_dir if base_dir is not None else template.output_dir)
    configs = {s: dataclasses.replace(template, seed=s, output_dir=str(base / f"seed_{s}")) for s in seeds}
    results = {}
    if workers <= 1:
        for s, c in configs.items():
            try:
                results[s] = train(c)
            except Exception as exc:
                log.error("seed %d failed: %s", s, exc)
                results[s] = exc
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {s: pool.submit(_train_one, c) for s, c in configs.items()}
        for s, fut in futures.items():
            try:
                results[s] = fut.result()
            except Exception as exc:
                log.error("seed %d failed: %s", s, exc)
                results[s] = exc
    return results


# ---------------------------------------------------------------- reporting

REPORT_HEADER = ["env", "variant", "n_seeds", "n_points", "mean_return", "mean_std_across_seeds",
                 "target", "n_reached", "time_to_target_mean", "time_to_target_std"]


def read_metrics(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected metrics header {header}")
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {k: data[:, i] for i, k in enumerate(header)}


def report(run_dirs, target: float | None = None, max_timestep: int | None = None) -> list[dict]:
    """Aggregate evaluation returns per variant.

    ``mean_return`` averages every evaluation point of every seed;
    ``mean_std_across_seeds`` takes the std over seeds at each evaluation
    point and averages those. Only timesteps present in every run of a
    variant are used, optionally capped at ``max_timestep``.
    """
    groups: dict[tuple, list] = {}
    envs = set()
    for d in run_dirs:
        d = Path(d)
        meta = parse_key_values((d / "config.txt").read_text())
        envs.add(meta["env"])
        groups.setdefault((meta["env"], meta["variant"]), []).append(read_metrics(d / "metrics.csv"))
    if not groups:
        raise ValueError("no run directories given")
    if len(envs) > 1:
        raise ValueError(f"cannot aggregate runs from different environments: {sorted(envs)}")

    rows = []
    for (env, variant), runs in sorted(groups.items(), key=lambda kv: VARIANTS.index(kv[0][1])
                                       if kv[0][1] in VARIANTS else len(VARIANTS)):
        common = set(runs[0]["timestep"].tolist())
        for r in runs[1:]:
            common &= set(r["timestep"].tolist())
        steps = np.array(sorted(t for t in common if max_timestep is None or t <= max_timestep))
        if steps.size == 0:
            raise ValueError(f"{variant}: runs share no evaluation timesteps")
        evals = np.array([r["eval_mean"][np.searchsorted(r["timestep"], steps)] for r in runs])
        row = {
            "env": env, "variant": variant, "n_seeds": len(runs), "n_points": int(steps.size),
            "mean_return": float(evals.mean()),
            "mean_std_across_seeds": float(evals.std(axis=0).mean()),
            "target": math.nan if target is None else float(target),
            "n_reached": 0, "time_to_target_mean": math.nan, "time_to_target_std": math.nan,
        }
        if target is not None:
            hits = []
            for e in evals:
                idx = np.flatnonzero(e >= target)
                if idx.size:
                    hits.append(steps[idx[0]])
            if hits:
                row.update(n_reached=len(hits), time_to_target_mean=float(np.mean(hits)),
                           time_to_target_std=float(np.std(hits)))
        rows.append(row)
    return rows


def write_report_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, REPORT_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def format_report(rows) -> str:
    def fmt(v):
        if isinstance(v, float):
            return "-" if math.isnan(v) else f"{v:.2f}"
        return str(v)

    table = [REPORT_HEADER] + [[fmt(r[k]) for k in REPORT_HEADER] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(REPORT_HEADER))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in table) + "\n"


# ---------------------------------------------------------------- analytics

def analyze(cfg: EreConfig, eta: float, K: int, batch: int, fill: int, out_dir) -> tuple[Path, Path]:
    """Write the sampling-range schedule and expected per-rank sample counts as CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schedule = range_schedule(cfg, eta, K, fill)
    counts = expected_sample_counts(cfg, eta, K, batch, fill)
    sched_path, counts_path = out / "schedule.csv", out / "expected_counts.csv"
    with open(sched_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "c_k"])
        w.writerows(zip(range(1, K + 1), schedule.tolist()))
    with open(counts_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["recency_rank", "expected_count"])
        w.writerows(zip(range(1, fill + 1), counts.tolist()))
    return sched_path, counts_path
