"""Multi-seed sweeps, cooperation comparisons and their CSV/JSON outputs."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import config_from_dict, config_to_dict
from .network import RegretTrace, SimConfig, run_episode

log = logging.getLogger(__name__)

TRACE_HEADER = ("t", "cum_loss", "best_fixed_loss", "regret", "oracle_calls_total")
SUMMARY_HEADER = ("arm", "point", "n_seeds", "mean_final_regret", "stderr",
                  "bound_value", "ratio", "mean_oracle_calls")
VARY_KEYS = {"horizon": "horizon", "q": "activation.q", "graph": "graph.file"}


@dataclass(frozen=True)
class SweepSpec:
    """A base config, one varied dimension, and a number of seeds.

    ``vary`` is ``None`` (single point), ``"horizon"``, ``"q"`` or
    ``"graph"``; ``values`` lists the sweep points.
    """

    base: dict
    vary: str | None = None
    values: tuple = ()
    n_seeds: int = 1
    first_seed: int = 0
    base_dir: str | None = None

    def __post_init__(self):
        if self.vary is not None and self.vary not in VARY_KEYS:
            raise ValueError(f"vary must be one of {sorted(VARY_KEYS)}")
        if self.vary is not None and not self.values:
            raise ValueError("a sweep over a dimension needs at least one value")
        if self.n_seeds < 1:
            raise ValueError("need at least one seed")

    @classmethod
    def from_config(cls, cfg: SimConfig, **kwargs):
        return cls(base=config_to_dict(cfg), **kwargs)

    @property
    def seeds(self) -> list:
        return list(range(self.first_seed, self.first_seed + self.n_seeds))

    def points(self) -> list:
        """(label, flat config dict) for every sweep point, in order."""
        if self.vary is None:
            return [("base", dict(self.base))]
        out = []
        key = VARY_KEYS[self.vary]
        for value in self.values:
            d = dict(self.base)
            if self.vary == "graph":
                for stale in ("graph.edges", "graph.n", "graph.kind"):
                    d.pop(stale, None)
                if isinstance(d.get("activation.q"), list) and len(set(d["activation.q"])) == 1:
                    d["activation.q"] = d["activation.q"][0]
            d[key] = value
            out.append((str(value), d))
        return out

    def configs(self) -> list:
        cfgs = [(label, config_from_dict(d, self.base_dir)) for label, d in self.points()]
        ks = {(c.family.kind, c.family.k, c.family.m) for _, c in cfgs}
        if len(ks) != 1:
            raise ValueError("all sweep points must share the action family")
        return cfgs


@dataclass(frozen=True)
class AggregateRow:
    point: str
    mean_final_regret: float
    stderr: float
    bound_value: float
    ratio: float
    mean_oracle_calls: float
    regrets: tuple = field(default=(), repr=False)

    @property
    def n_seeds(self) -> int:
        return len(self.regrets)


@dataclass
class RunResult:
    arm: str
    point: str
    seed: int
    final_regret: float
    oracle_calls: int
    bound: float
    csv_text: str
    metadata: dict


def trace_csv(trace: RegretTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for t in range(trace.horizon):
        writer.writerow((t + 1, repr(float(trace.cum_loss[t])),
                         repr(float(trace.best_fixed_loss[t])), repr(float(trace.regret[t])),
                         int(trace.oracle_calls_total[t])))
    return buf.getvalue()


def trace_metadata(trace: RegretTrace, **extra) -> dict:
    p = trace.params
    meta = {
        "root_seed": trace.root_seed,
        "config": trace.config_echo,
        "eta": p.eta,
        "beta": p.beta,
        "tuned": p.tuned,
        "alpha1": p.alpha1,
        "Q": p.Q,
        "bound_value": None if math.isnan(p.bound) else p.bound,
        "final_regret": trace.final_regret,
        "best_action": trace.best_action.tolist(),
        "oracle_calls_per_agent": trace.oracle_calls_per_agent.tolist(),
        "max_round_oracle_calls": trace.max_round_oracle_calls.tolist(),
    }
    meta.update(extra)
    return meta


def _run_one(job) -> RunResult:
    arm, label, cfg, seed = job
    trace = run_episode(cfg, seed)
    meta = trace_metadata(trace, arm=arm, point=label)
    return RunResult(arm, label, seed, trace.final_regret, int(trace.oracle_calls_total[-1]),
                     trace.params.bound, trace_csv(trace), meta)


def _execute(jobs: list, n_workers: int) -> list:
    if n_workers <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(_run_one, jobs))


def aggregate(results: list, point: str) -> AggregateRow:
    regrets = np.array([r.final_regret for r in results], dtype=float)
    mean = float(regrets.mean())
    stderr = float(regrets.std(ddof=1) / np.sqrt(len(regrets))) if len(regrets) > 1 else 0.0
    bound = float(results[0].bound)
    ratio = mean / bound if bound > 0 else float("nan")
    calls = float(np.mean([r.oracle_calls for r in results]))
    return AggregateRow(point, mean, stderr, bound, ratio, calls, tuple(regrets.tolist()))


def _write_outputs(out_dir: str, results: list, rows_by_arm: dict):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "metadata.jsonl"), "w") as meta_fh:
        for r in results:
            name = f"{r.arm}_{_safe(r.point)}_seed{r.seed}.csv"
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                fh.write(r.csv_text)
            meta_fh.write(json.dumps(dict(r.metadata, trace_file=name), sort_keys=True) + "\n")
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for arm, rows in rows_by_arm.items():
            for row in rows:
                writer.writerow((arm, row.point, row.n_seeds, repr(row.mean_final_regret),
                                 repr(row.stderr), repr(row.bound_value), repr(row.ratio),
                                 repr(row.mean_oracle_calls)))


def _safe(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in os.path.basename(label))


def _run_arms(spec: SweepSpec, arms: dict, out_dir, n_workers) -> dict:
    configs = spec.configs()
    jobs = [(arm, label, make(cfg), seed)
            for arm, make in arms.items()
            for label, cfg in configs
            for seed in spec.seeds]
    results = _execute(jobs, n_workers)
    rows = {}
    for arm in arms:
        rows[arm] = [aggregate([r for r in results if r.arm == arm and r.point == label], label)
                     for label, _ in configs]
    if out_dir is not None:
        _write_outputs(out_dir, results, rows)
    return rows


def run_sweep(spec: SweepSpec, out_dir: str | None = None, n_workers: int = 1) -> list:
    """Run every (point, seed) pair; one trace CSV per run when ``out_dir`` is set."""
    return _run_arms(spec, {"coop": lambda c: c}, out_dir, n_workers)["coop"]


def compare_cooperation(spec: SweepSpec, out_dir: str | None = None,
                        n_workers: int = 1) -> tuple:
    """Cooperative runs and their no-sharing counterparts on identical seeds.

    Both arms see the same losses and activations; only message exchange
    differs.
    """
    rows = _run_arms(spec, {"coop": lambda c: c.replace(cooperate=True),
                            "nocoop": lambda c: c.replace(cooperate=False)},
                     out_dir, n_workers)
    return rows["coop"], rows["nocoop"]


@dataclass(frozen=True)
class PairedDifference:
    mean: float
    stderr: float

    @property
    def significant(self) -> bool:
        """Baseline minus cooperative exceeds one standard error."""
        return self.mean > self.stderr


def paired_difference(coop: AggregateRow, baseline: AggregateRow) -> PairedDifference:
    diff = np.array(baseline.regrets) - np.array(coop.regrets)
    se = float(diff.std(ddof=1) / np.sqrt(len(diff))) if len(diff) > 1 else 0.0
    return PairedDifference(float(diff.mean()), se)


def loglog_slope(horizons, regrets) -> float:
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(np.asarray(regrets, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
