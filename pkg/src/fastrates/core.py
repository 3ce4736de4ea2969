"""Shared domain types, regret/variance accounting, and deterministic seeding.

Everything downstream (learners, environments, harness) builds on the small
vocabulary defined here: validated loss vectors and probability vectors,
regret traces with logarithmically spaced checkpoints, convex domains for the
OCO setting, and a counter-based RNG keyed by a collision-resistant seed
derivation so that every run is replayable bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

PMF_TOL = 1e-9


class ContractViolation(ValueError):
    """An operation was called with inputs that break its preconditions."""


class ConfigurationError(ValueError):
    """An invalid or incompatible run/sweep configuration."""


class UnsupportedOperation(RuntimeError):
    """The operation is not available for the given inputs (e.g. no exact laws)."""


# ---------------------------------------------------------------------------
# Validated vectors
# ---------------------------------------------------------------------------

def as_loss_vector(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate and return a per-expert loss vector with entries in [0, 1]."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractViolation("loss vector must be a nonempty 1-d sequence")
    if np.any(arr < -PMF_TOL) or np.any(arr > 1.0 + PMF_TOL):
        raise ContractViolation(f"loss entries must lie in [0, 1], got range "
                                f"[{arr.min()}, {arr.max()}]")
    return np.clip(arr, 0.0, 1.0)


def as_pmf(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate and return a probability mass function (sums to 1, entries >= 0)."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractViolation("pmf must be a nonempty 1-d sequence")
    if np.any(arr < -PMF_TOL):
        raise ContractViolation("pmf entries must be nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > PMF_TOL:
        raise ContractViolation(f"pmf must sum to 1 within {PMF_TOL}, got {total}")
    return np.clip(arr, 0.0, None)


@dataclass(frozen=True)
class LossEvent:
    """One OCO round's random draw.

    kind is the environment family tag; x is the feature/sample payload
    (vector with two-norm <= 1 for hinge, scalar in [0, 1] for absolute loss)
    and y the optional binary label.
    """
    kind: str
    x: np.ndarray | float
    y: int | None = None


# ---------------------------------------------------------------------------
# Regret accounting
# ---------------------------------------------------------------------------

class Checkpoint(NamedTuple):
    t: int
    learner_cum_loss: float
    comparator_cum_loss: float
    regret: float
    v: float


def is_checkpoint_round(t: int) -> bool:
    """Checkpoints live at powers of two; the final round is always recorded."""
    return t > 0 and (t & (t - 1)) == 0


@dataclass
class RegretTrace:
    """Cumulative learner/comparator losses with checkpoints at t in {1,2,4,...,T}.

    Accumulation keeps exact running sums every round; snapshots are taken at
    geometrically spaced rounds so that log-log rate fits stay cheap at large T.
    """
    t: int = 0
    learner_cum: float = 0.0
    comparator_cum: float = 0.0
    v: float = 0.0
    checkpoints: list[Checkpoint] = field(default_factory=list)

    @property
    def regret(self) -> float:
        return self.learner_cum - self.comparator_cum

    def _snapshot(self) -> None:
        self.checkpoints.append(Checkpoint(
            self.t, self.learner_cum, self.comparator_cum, self.regret, self.v))

    def record_round(self, learner_loss: float, comparator_loss: float) -> None:
        """Add one round of losses; snapshot if the round is a checkpoint."""
        self.t += 1
        self.learner_cum += learner_loss
        self.comparator_cum += comparator_loss
        inc = learner_loss - comparator_loss
        self.v += inc * inc
        if is_checkpoint_round(self.t):
            self._snapshot()

    def finalize(self) -> "RegretTrace":
        """Ensure the last round is checkpointed (the `... union {T}` rule)."""
        if self.t > 0 and (not self.checkpoints or self.checkpoints[-1].t != self.t):
            self._snapshot()
        return self


def accumulate_hedge(trace: RegretTrace, weights: np.ndarray,
                     losses: np.ndarray, comparator: int) -> RegretTrace:
    """Accumulate one Hedge round: learner loss <w, l>, comparator loss l[k]."""
    w = np.asarray(weights, dtype=float)
    l = np.asarray(losses, dtype=float)
    if w.shape != l.shape:
        raise ContractViolation(
            f"weights and losses must have equal length ({w.shape} vs {l.shape})")
    if not 0 <= comparator < l.size:
        raise ContractViolation(f"comparator index {comparator} out of range")
    h = float(w @ l)
    trace.record_round(h, float(l[comparator]))
    return trace


def accumulate_oco(trace: RegretTrace, point: np.ndarray, gradient: np.ndarray,
                   comparator: np.ndarray) -> RegretTrace:
    """Accumulate one linearized OCO round: regret increment <w - u*, g>."""
    w = np.atleast_1d(np.asarray(point, dtype=float))
    g = np.atleast_1d(np.asarray(gradient, dtype=float))
    u = np.atleast_1d(np.asarray(comparator, dtype=float))
    if not (w.shape == g.shape == u.shape):
        raise ContractViolation(
            f"dimension mismatch: point {w.shape}, gradient {g.shape}, "
            f"comparator {u.shape}")
    # Book-keep <w, g> as "learner loss" and <u*, g> as "comparator loss" so
    # that regret = <w - u*, g> and v increments are its square.
    trace.record_round(float(w @ g), float(u @ g))
    return trace


# ---------------------------------------------------------------------------
# Deterministic seeding
# ---------------------------------------------------------------------------

def derive_seed(master_seed: int, labels: Sequence[str | int]) -> int:
    """Mix a master seed and a label path into a 64-bit stream seed.

    Hash-based so that distinct label paths give independent streams on every
    platform; the same inputs always produce the same output.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(int(master_seed).to_bytes(8, "little", signed=False))
    for label in labels:
        if isinstance(label, bool) or not isinstance(label, (int, str)):
            raise ContractViolation(f"labels must be str or int, got {label!r}")
        tag = b"i:" if isinstance(label, int) else b"s:"
        h.update(b"\x1f" + tag + str(label).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a derived seed."""
    return np.random.Generator(np.random.Philox(key=seed & (2**64 - 1)))


@dataclass(frozen=True)
class RunKey:
    """Identifies a run; equal keys must reproduce bit-identical traces."""
    env_id: str
    algo_id: str
    horizon: int
    seed: int

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ContractViolation("horizon must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ContractViolation("seed must fit in 64 unsigned bits")

    def stream_seed(self) -> int:
        """Seed of the environment's loss stream: independent of the algorithm."""
        return derive_seed(self.seed, ["env", self.env_id, self.horizon])


# ---------------------------------------------------------------------------
# Convex domains (OCO action sets)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BallDomain:
    """Euclidean ball of given radius centered at the origin."""
    dim: int
    radius: float = 1.0

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def centroid(self) -> np.ndarray:
        return np.zeros(self.dim)

    def contains(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        return float(np.linalg.norm(u)) <= self.radius + tol

    def clip(self, u: np.ndarray) -> np.ndarray:
        n = float(np.linalg.norm(u))
        return u if n <= self.radius else u * (self.radius / n)


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lo, hi]^d."""
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi) or any(a > b for a, b in zip(self.lo, self.hi)):
            raise ContractViolation("box bounds must satisfy lo <= hi per coordinate")
        object.__setattr__(self, "_lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "_hi", np.asarray(self.hi, dtype=float))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self._hi - self._lo))

    def centroid(self) -> np.ndarray:
        return (self._lo + self._hi) / 2.0

    def contains(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(u >= self._lo - tol) and np.all(u <= self._hi + tol))

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self._lo, self._hi)


@dataclass(frozen=True)
class SimplexDomain:
    """Probability simplex over k coordinates (the Hedge-as-OCO action set)."""
    k: int

    @property
    def dim(self) -> int:
        return self.k

    @property
    def diameter(self) -> float:
        return float(np.sqrt(2.0))

    def centroid(self) -> np.ndarray:
        return np.full(self.k, 1.0 / self.k)

    def contains(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(u >= -tol) and abs(float(u.sum()) - 1.0) <= tol)

    def clip(self, u: np.ndarray) -> np.ndarray:
        # Euclidean projection onto the simplex (sort-based).
        v = np.asarray(u, dtype=float)
        srt = np.sort(v)[::-1]
        css = np.cumsum(srt) - 1.0
        rho = np.nonzero(srt - css / np.arange(1, v.size + 1) > 0)[0][-1]
        theta = css[rho] / (rho + 1.0)
        return np.clip(v - theta, 0.0, None)


Domain = BallDomain | BoxDomain | SimplexDomain
