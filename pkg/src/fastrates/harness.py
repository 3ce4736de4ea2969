"""Experiment execution and aggregation.

Runs (environment x algorithm x horizon x seed) cells deterministically,
records regret traces at logarithmic checkpoints, fits rate exponents by
log-log regression across seeds, compares empirical regret against the tuned
theoretical bounds, and reports high-probability quantiles.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import algorithms, conditions, environments
from .core import (ConfigurationError, LossEvent, RegretTrace, RunKey,
                   SimplexDomain, accumulate_hedge, accumulate_oco)

CSV_HEADER = ["run_id", "env", "algo", "T", "seed", "t",
              "learner_loss", "comparator_loss", "regret", "v"]

HEDGE_ALGOS = {"squint", "hedge", "ftl"}


class FitInfeasible(RuntimeError):
    """Too few usable horizons remain for a rate fit."""


# ---------------------------------------------------------------------------
# Algorithm specs
# ---------------------------------------------------------------------------

def parse_algo_id(spec: str) -> dict:
    """Parse 'kind:key=value,...' into an algorithm spec dict."""
    kind, _, rest = spec.partition(":")
    out: dict = {"kind": kind.strip()}
    for token in filter(None, (t.strip() for t in rest.split(","))):
        key, eq, value = token.partition("=")
        if not eq:
            raise ConfigurationError(f"malformed algo token {token!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            out[key.strip()] = value.strip()
    return out


def format_algo_id(spec: dict) -> str:
    kind = spec["kind"]
    extras = {k: v for k, v in spec.items() if k != "kind"}
    if not extras:
        return kind
    return kind + ":" + ",".join(f"{k}={v:g}" if isinstance(v, float)
                                 else f"{k}={v}" for k, v in sorted(extras.items()))


def _poly_prior(n: int) -> np.ndarray:
    k = np.arange(n, dtype=float)
    w = 1.0 / ((k + 1.0) * (k + 2.0))
    return w / w.sum()


def make_algo(spec: dict, env, horizon: int):
    kind = spec.get("kind")
    if kind == "squint":
        if env.setting != "hedge":
            raise ConfigurationError("squint requires a Hedge environment")
        prior_name = spec.get("prior", "uniform")
        if prior_name == "uniform":
            prior = np.full(env.n_experts, 1.0 / env.n_experts)
        elif prior_name == "poly":
            prior = _poly_prior(env.n_experts)
        else:
            raise ConfigurationError(f"unknown prior {prior_name!r}")
        return algorithms.Squint(prior, horizon)
    if kind == "hedge":
        if env.setting != "hedge":
            raise ConfigurationError("fixed-eta hedge requires a Hedge environment")
        return algorithms.FixedHedge(env.n_experts, float(spec.get("eta", 0.5)))
    if kind == "ftl":
        if env.setting != "hedge":
            raise ConfigurationError("follow-the-leader requires a Hedge environment")
        return algorithms.FollowTheLeader(env.n_experts)
    if kind == "metagrad":
        if env.setting == "oco":
            return algorithms.MetaGrad(env.domain, G=env.G, horizon_hint=horizon,
                                       D=env.D)
        # Hedge-as-OCO reduction: linear losses on the probability simplex.
        k = env.n_experts
        return algorithms.MetaGrad(SimplexDomain(k), G=math.sqrt(k),
                                   horizon_hint=horizon, D=math.sqrt(2.0))
    raise ConfigurationError(f"unknown algorithm kind {kind!r}")


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    key: RunKey
    trace: RegretTrace
    stream_hash: str
    certified_k: float | None = None
    certified_bound: float | None = None


def run_once(env, algo_spec: dict | str, horizon: int, seed: int,
             env_id: str | None = None) -> RunResult:
    """Play one full run; deterministic given (env id, algo id, T, seed)."""
    if isinstance(algo_spec, str):
        algo_spec = parse_algo_id(algo_spec)
    env_id = env_id or env.canonical_id()
    algo_id = format_algo_id(algo_spec)
    kind = algo_spec["kind"]
    if kind in HEDGE_ALGOS and env.setting != "hedge":
        raise ConfigurationError(
            f"algorithm {algo_id!r} cannot run on OCO environment {env_id!r}")
    key = RunKey(env_id, algo_id, horizon, seed)
    algo = make_algo(algo_spec, env, horizon)
    stream = env.open(key.stream_seed())
    hasher = hashlib.blake2b(digest_size=16)
    trace = RegretTrace()

    if env.setting == "hedge" and kind in HEDGE_ALGOS:
        comparator = int(env.oracle().best)
        for _ in range(horizon):
            w = algo.predict()
            losses = stream.next()
            hasher.update(losses.tobytes())
            accumulate_hedge(trace, w, losses, comparator)
            algo.update(losses, weights=w)
    elif env.setting == "hedge":
        # MetaGrad on a Hedge stream: linear losses over the simplex.
        u_star = np.zeros(env.n_experts)
        u_star[int(env.oracle().best)] = 1.0
        for _ in range(horizon):
            w = algo.predict()
            losses = stream.next()
            hasher.update(losses.tobytes())
            accumulate_oco(trace, w, losses, u_star)
            algo.update(losses, point=w)
    else:
        u_star = np.atleast_1d(np.asarray(env.oracle().best, dtype=float))
        for _ in range(horizon):
            w = algo.predict()
            event = stream.next()
            hasher.update(_event_bytes(event))
            g = env.grad(event, w)
            accumulate_oco(trace, w, g, u_star)
            algo.update(g, point=w)

    trace.finalize()
    result = RunResult(key, trace, hasher.hexdigest())
    if isinstance(algo, algorithms.Squint):
        comparator = int(env.oracle().best)
        result.certified_k = algo.certified_complexity(comparator)
        result.certified_bound = algo.bound(comparator)
    return result


def _event_bytes(event: LossEvent) -> bytes:
    x = np.atleast_1d(np.asarray(event.x, dtype=float))
    y = b"" if event.y is None else int(event.y).to_bytes(2, "little", signed=True)
    return x.tobytes() + y


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

class Record(NamedTuple):
    run_id: str
    env: str
    algo: str
    T: int
    seed: int
    t: int
    learner_loss: float
    comparator_loss: float
    regret: float
    v: float


@dataclass
class SweepConfig:
    envs: list          # env config dicts ({"family", "params"}) or id strings
    algos: list         # algo spec dicts or id strings
    horizons: list
    seeds: int
    master_seed: int = 0
    checkpoints: str = "pow2"
    output: str | None = None

    def __post_init__(self) -> None:
        if list(self.horizons) != sorted(set(int(t) for t in self.horizons)):
            raise ConfigurationError("horizons must be strictly increasing")
        if self.seeds < 1:
            raise ConfigurationError("need at least one seed per cell")
        if self.checkpoints != "pow2":
            raise ConfigurationError("only the pow2 checkpoint policy is implemented")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {"envs", "algos", "horizons", "seeds", "master_seed",
                 "checkpoints", "output"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown sweep config keys {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = {"envs": self.envs, "algos": self.algos,
               "horizons": [int(t) for t in self.horizons],
               "seeds": self.seeds, "master_seed": self.master_seed,
               "checkpoints": self.checkpoints}
        if self.output:
            out["output"] = self.output
        return out


def _resolve_env(entry):
    if isinstance(entry, str):
        return environments.parse_env_id(entry)
    return environments.env_from_config(entry)


def _resolve_algo(entry) -> dict:
    return parse_algo_id(entry) if isinstance(entry, str) else dict(entry)


def _run_cell(args) -> list[Record]:
    env_entry, algo_entry, horizon, seed, env_id, algo_id = args
    env = _resolve_env(env_entry)
    result = run_once(env, _resolve_algo(algo_entry), horizon, seed, env_id=env_id)
    run_id = f"{env_id}|{algo_id}|T={horizon}|seed={seed}"
    return [Record(run_id, env_id, algo_id, horizon, seed, cp.t,
                   cp.learner_cum_loss, cp.comparator_cum_loss, cp.regret, cp.v)
            for cp in result.trace.checkpoints]


def worker_count() -> int:
    env_value = os.environ.get("FASTRATES_THREADS", "")
    if env_value.strip():
        return max(1, int(env_value))
    return max(1, os.cpu_count() or 1)


def sweep(config: SweepConfig, workers: int | None = None
          ) -> tuple[list[Record], list[str]]:
    """Run all cells; returns (sorted records, per-cell failure messages)."""
    cells = []
    for env_entry in config.envs:
        env = _resolve_env(env_entry)
        env_id = env.canonical_id()
        for algo_entry in config.algos:
            algo_id = format_algo_id(_resolve_algo(algo_entry))
            for horizon in config.horizons:
                for s in range(config.seeds):
                    seed = (config.master_seed + s) % 2 ** 64
                    cells.append((env_entry, algo_entry, int(horizon), seed,
                                  env_id, algo_id))
    n_workers = workers if workers is not None else worker_count()
    records: list[Record] = []
    failures: list[str] = []
    if n_workers <= 1 or len(cells) <= 1:
        outcomes = []
        for cell in cells:
            try:
                outcomes.append((cell, _run_cell(cell), None))
            except Exception as exc:  # partial failures must not kill the sweep
                outcomes.append((cell, [], exc))
    else:
        outcomes = []
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [(cell, pool.submit(_run_cell, cell)) for cell in cells]
            for cell, fut in futures:
                try:
                    outcomes.append((cell, fut.result(), None))
                except Exception as exc:
                    outcomes.append((cell, [], exc))
    for cell, rows, exc in outcomes:
        if exc is not None:
            failures.append(f"{cell[4]}|{cell[5]}|T={cell[2]}|seed={cell[3]}: {exc}")
        records.extend(rows)
    records.sort(key=lambda r: (r.env, r.algo, r.T, r.seed, r.t))
    return records, failures


def write_records_csv(records: Iterable[Record], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow([rec.run_id, rec.env, rec.algo, rec.T, rec.seed, rec.t,
                             repr(rec.learner_loss), repr(rec.comparator_loss),
                             repr(rec.regret), repr(rec.v)])


def read_records_csv(path: str) -> list[Record]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ConfigurationError(f"unexpected results header {header}")
        for row in reader:
            records.append(Record(row[0], row[1], row[2], int(row[3]), int(row[4]),
                                  int(row[5]), float(row[6]), float(row[7]),
                                  float(row[8]), float(row[9])))
    return records


# ---------------------------------------------------------------------------
# Rate fitting
# ---------------------------------------------------------------------------

BURN_IN_HORIZON = 512  # rate fits ignore horizons below this (transient)


@dataclass
class RateFit:
    slope: float
    intercept: float
    stderr: float
    points: list[tuple[float, float]]
    dropped: list[int] = field(default_factory=list)
    burn_in: list[int] = field(default_factory=list)


def final_regrets(records: Sequence[Record]) -> dict[int, np.ndarray]:
    """Per-horizon array of final-checkpoint regrets across seeds."""
    per_cell: dict[tuple[int, int], float] = {}
    for rec in records:
        if rec.t == rec.T:
            per_cell[(rec.T, rec.seed)] = rec.regret
    out: dict[int, np.ndarray] = {}
    for horizon in sorted({T for T, _ in per_cell}):
        vals = [v for (T, _), v in sorted(per_cell.items()) if T == horizon]
        out[horizon] = np.asarray(vals)
    return out


def _statistic(values: np.ndarray, statistic) -> float:
    if statistic == "mean":
        return float(values.mean())
    if isinstance(statistic, tuple) and statistic[0] == "quantile":
        return float(np.quantile(values, statistic[1]))
    if isinstance(statistic, str) and statistic.startswith("quantile:"):
        return float(np.quantile(values, float(statistic.split(":")[1])))
    raise ConfigurationError(f"unknown statistic {statistic!r}")


def fit_rate(records: Sequence[Record], statistic="mean",
             min_horizon: int = BURN_IN_HORIZON) -> RateFit:
    """OLS of ln(statistic of final regret) on ln T across horizons.

    Horizons below `min_horizon` are excluded as burn-in; horizons whose
    statistic is non-positive are dropped (logged in the result).
    """
    groups = final_regrets(records)
    points, dropped, burn_in = [], [], []
    for horizon, values in groups.items():
        if horizon < min_horizon:
            burn_in.append(horizon)
            continue
        stat = _statistic(values, statistic)
        if stat <= 0.0:
            dropped.append(horizon)
            continue
        points.append((math.log(horizon), math.log(stat)))
    if len(points) < 3:
        raise FitInfeasible(
            f"only {len(points)} horizons with positive statistic "
            f"(dropped {dropped}); need at least 3")
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ y) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = max(len(points) - 2, 1)
    stderr = math.sqrt(max(float(resid @ resid), 0.0) / dof / sxx)
    return RateFit(slope, intercept, stderr, points, dropped, burn_in)


# ---------------------------------------------------------------------------
# Bound comparison and quantiles
# ---------------------------------------------------------------------------

def squint_certified_complexity(n_experts: int, horizon: int,
                                prior: str = "uniform", best: int = 0) -> float:
    """-ln pi^{k*} - ln rho_j for the run's grid (constant over j: rho uniform)."""
    grid = algorithms.squint_eta_grid(horizon)
    if prior == "uniform":
        pi_best = 1.0 / n_experts
    elif prior == "poly":
        pi_best = float(_poly_prior(n_experts)[best])
    else:
        raise ConfigurationError(f"unknown prior {prior!r}")
    return -math.log(pi_best) + math.log(grid.size)


def nominal_complexity(env, algo_kind: str, horizon: int) -> float:
    """-ln pi^{f*} + ln ln T (Squint) or d ln T + 10 (MetaGrad reporting only)."""
    if algo_kind == "squint":
        return math.log(env.n_experts) + math.log(max(math.log(horizon), 1.0))
    dim = env.domain.dim if env.setting == "oco" else env.n_experts
    return dim * math.log(max(horizon, 2)) + 10.0


def compare_bound(records: Sequence[Record], env, algo_spec: dict | str,
                  policy: str = "squint-certified") -> list[dict]:
    """Empirical mean regret vs gamma-optimized theoretical bound per horizon."""
    if isinstance(algo_spec, str):
        algo_spec = parse_algo_id(algo_spec)
    oracle = env.oracle()
    rows = []
    for horizon, values in final_regrets(records).items():
        if policy == "squint-certified":
            k_t = squint_certified_complexity(
                env.n_experts, horizon, algo_spec.get("prior", "uniform"),
                int(oracle.best))
        elif policy == "nominal":
            k_t = nominal_complexity(env, algo_spec["kind"], horizon)
        else:
            raise ConfigurationError(f"unknown K_T policy {policy!r}")
        bound, gamma = conditions.optimized_theorem_bound(
            k_t, oracle.bernstein_B, oracle.kappa, horizon)
        emp = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
        rows.append({
            "T": horizon,
            "empirical": emp,
            "stderr": se,
            "K_T": k_t,
            "theoretical": bound,
            "gamma": gamma,
            "ratio": emp / bound if bound > 0 else math.nan,
            "expected_regret_bound": conditions.expected_regret_bound(
                oracle.bernstein_B, oracle.kappa, k_t, horizon),
        })
    return rows


def quantile_report(records: Sequence[Record], deltas: Sequence[float] = (0.1, 0.01),
                    oracle=None, k_t: float | None = None
                    ) -> tuple[list[dict], list[str]]:
    """Empirical (1-delta)-quantiles of final regret per horizon.

    Requires at least 2/delta seeds for each delta (skipped with a warning
    otherwise).  When an oracle and complexity are supplied, each row also
    carries the (K_T - ln delta)^(1/(2-kappa)) T^((1-kappa)/(2-kappa)) shape
    for slope comparison.
    """
    rows, warnings = [], []
    for horizon, values in final_regrets(records).items():
        for delta in deltas:
            needed = math.ceil(2.0 / delta)
            if values.size < needed:
                warnings.append(
                    f"T={horizon}: {values.size} seeds < {needed} required for "
                    f"delta={delta}; skipped")
                continue
            row = {"T": horizon, "delta": float(delta),
                   "quantile": float(np.quantile(values, 1.0 - delta)),
                   "n_seeds": int(values.size)}
            if oracle is not None and k_t is not None:
                kappa = oracle.kappa
                row["shape"] = ((k_t - math.log(delta)) ** (1.0 / (2.0 - kappa))
                                * horizon ** ((1.0 - kappa) / (2.0 - kappa)))
            rows.append(row)
    return rows, warnings
