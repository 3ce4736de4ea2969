"""Stochastic loss generators with ground-truth oracles.

Each family produces an oblivious loss stream (losses depend only on the seed
and round index, never on the learner) and an oracle reporting the optimal
comparator, the Bernstein pair (B, kappa) and, where the laws are finite,
exact excess-loss distributions for the theory checks.

Families: expert losses with a mean gap, the any-kappa two-point construction,
binary sequences from an order-m Markov chain scored by all context functions,
hinge loss on the unit ball, absolute loss on the unit interval, and uniform
random sign losses (the stochastic worst case).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .conditions import FiniteDist, zero_law
from .core import (BallDomain, BoxDomain, ContractViolation, Domain, LossEvent,
                   derive_seed, make_rng)

MU_NORM_SAMPLES = 10 ** 6


@dataclass(frozen=True)
class EnvOracle:
    """Ground truth for an environment: optimum, Bernstein pair, exact laws."""
    best: object                     # expert index (Hedge) or point u* (OCO)
    kappa: float
    bernstein_B: float
    exact_B: float | None = None
    excess_laws: tuple[FiniteDist, ...] | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.bernstein_B <= 0:
            raise ContractViolation("bernstein_B must be positive")
        if not 0.0 <= self.kappa <= 1.0:
            raise ContractViolation("kappa must lie in [0, 1]")
        if self.exact_B is not None and self.exact_B > self.bernstein_B + 1e-9:
            raise ContractViolation("exact_B cannot exceed bernstein_B")
        if self.excess_laws is not None:
            for law in self.excess_laws:
                if law.mean() < -1e-12:
                    raise ContractViolation(
                        f"excess law {law.label!r} has negative mean")


class HedgeStream:
    """Per-round loss vectors for a Hedge environment."""

    def __init__(self, env: "HedgeEnv", seed: int):
        self.env = env
        self.rng = make_rng(seed)

    def next(self) -> np.ndarray:
        return self.env._draw(self.rng)


class MarkovStream(HedgeStream):
    """Hedge stream carrying the Markov chain's context between rounds."""

    def __init__(self, env: "MarkovExperts", seed: int):
        super().__init__(env, seed)
        self.context = 0

    def next(self) -> np.ndarray:
        env = self.env
        c = self.context
        z = int(self.rng.random() < env.p[c])
        self.context = ((c << 1) | z) & (env.n_contexts - 1)
        return np.abs(env._bits[c] - z)


class OcoStream:
    """Per-round sample events for an OCO environment."""

    def __init__(self, env: "OcoEnv", seed: int):
        self.env = env
        self.rng = make_rng(seed)

    def next(self) -> LossEvent:
        return self.env._draw(self.rng)


class HedgeEnv:
    setting = "hedge"
    family: str

    @property
    def n_experts(self) -> int:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def oracle(self) -> EnvOracle:
        raise NotImplementedError

    def open(self, seed: int) -> HedgeStream:
        return HedgeStream(self, seed)

    def canonical_id(self) -> str:
        return format_env_id(self.family, self.params())

    def _draw(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class OcoEnv:
    setting = "oco"
    family: str
    domain: Domain
    D: float
    G: float

    def params(self) -> dict:
        raise NotImplementedError

    def oracle(self) -> EnvOracle:
        raise NotImplementedError

    def open(self, seed: int) -> OcoStream:
        return OcoStream(self, seed)

    def canonical_id(self) -> str:
        return format_env_id(self.family, self.params())

    def loss(self, event: LossEvent, u: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, event: LossEvent, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def representative_points(self) -> np.ndarray:
        """Deterministic comparator grid used by the moment/CGF checks."""
        raise NotImplementedError

    def _draw(self, rng: np.random.Generator) -> LossEvent:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Hedge: mean gap
# ---------------------------------------------------------------------------

class GapExperts(HedgeEnv):
    """One expert with mean mu0, all others with mean mu0 + alpha.

    noise=1 draws Bernoulli losses at those means; noise=0 emits the means
    themselves every round (the deterministic variant).
    """
    family = "gap"

    def __init__(self, alpha: float, K: int = 8, mu0: float = 0.3,
                 noise: int = 1):
        if not 0.0 < alpha <= 1.0:
            raise ContractViolation("gap alpha must lie in (0, 1]")
        if K < 2:
            raise ContractViolation("need at least 2 experts to have a gap")
        if mu0 < 0.0 or mu0 + alpha > 1.0:
            raise ContractViolation("expert means must stay inside [0, 1]")
        if noise not in (0, 1):
            raise ContractViolation("noise must be 0 (deterministic) or 1")
        self.alpha = float(alpha)
        self.K = int(K)
        self.mu0 = float(mu0)
        self.noise = int(noise)
        self.means = np.full(self.K, self.mu0 + self.alpha)
        self.means[0] = self.mu0

    @property
    def n_experts(self) -> int:
        return self.K

    def params(self) -> dict:
        return {"alpha": self.alpha, "K": self.K, "mu0": self.mu0,
                "noise": self.noise}

    def _draw(self, rng: np.random.Generator) -> np.ndarray:
        if self.noise == 0:
            return self.means.copy()
        return (rng.random(self.K) < self.means).astype(float)

    def oracle(self) -> EnvOracle:
        mu_k = self.mu0 + self.alpha
        if self.noise == 0:
            bad = FiniteDist((self.alpha,), (1.0,), label="bad-expert")
            exact = self.alpha
        else:
            p_plus = mu_k * (1.0 - self.mu0)   # bad expert loses, best wins
            p_minus = self.mu0 * (1.0 - mu_k)
            bad = FiniteDist((1.0, -1.0, 0.0),
                             (p_plus, p_minus, 1.0 - p_plus - p_minus),
                             label="bad-expert")
            exact = (mu_k + self.mu0 - 2.0 * self.mu0 * mu_k) / self.alpha
        return EnvOracle(best=0, kappa=1.0, bernstein_B=1.0 / self.alpha,
                         exact_B=exact, excess_laws=(zero_law(), bad))


# ---------------------------------------------------------------------------
# Hedge: any-kappa construction
# ---------------------------------------------------------------------------

class KappaExperts(HedgeEnv):
    """Expert with parameter delta loses 1/2 +- delta, the + branch with
    probability (1 + delta^(2/kappa - 1))/2; delta = 0 is the optimum with
    deterministic loss 1/2.  kappa = 0 uses the limiting fair-coin law.
    """
    family = "kappa"

    def __init__(self, kappa: float, K: int = 64,
                 deltas: Sequence[float] | None = None):
        if not 0.0 <= kappa <= 1.0:
            raise ContractViolation("kappa must lie in [0, 1]")
        if deltas is None:
            if K < 1:
                raise ContractViolation("need at least one expert")
            deltas = [0.0] + [1.0 / (k + 1.0) for k in range(1, K)]
        deltas = np.asarray(list(deltas), dtype=float)
        if deltas.size == 0 or deltas[0] != 0.0:
            raise ContractViolation("delta_0 = 0 (the optimal expert) is required")
        if np.any(deltas < 0.0) or np.any(deltas > 0.5):
            raise ContractViolation("all deltas must lie in [0, 1/2]")
        self.kappa = float(kappa)
        self.deltas = deltas
        self.up_probs = (1.0 + self._bias(deltas)) / 2.0

    def _bias(self, deltas: np.ndarray) -> np.ndarray:
        # delta^(2/kappa - 1); the kappa -> 0 limit is 0 for delta < 1.
        if self.kappa == 0.0:
            return np.zeros_like(deltas)
        with np.errstate(divide="ignore"):
            return np.where(deltas > 0.0,
                            deltas ** (2.0 / self.kappa - 1.0), 0.0)

    @property
    def n_experts(self) -> int:
        return self.deltas.size

    def params(self) -> dict:
        out = {"kappa": self.kappa, "K": self.n_experts}
        default = np.array([0.0] + [1.0 / (k + 1.0)
                                    for k in range(1, self.n_experts)])
        if not np.allclose(self.deltas, default):
            out["deltas"] = [float(d) for d in self.deltas]
        return out

    def _draw(self, rng: np.random.Generator) -> np.ndarray:
        signs = np.where(rng.random(self.n_experts) < self.up_probs, 1.0, -1.0)
        return 0.5 + self.deltas * signs

    def oracle(self) -> EnvOracle:
        laws = [zero_law()]
        for d in sorted(set(float(x) for x in self.deltas if x > 0.0)):
            q = float(self._bias(np.array([d]))[0])
            laws.append(FiniteDist((d, -d), ((1.0 + q) / 2.0, (1.0 - q) / 2.0),
                                   label=f"delta={d:g}"))
        if self.kappa > 0.0:
            exact = 1.0 if len(laws) > 1 else None
        else:
            exact = max((float(d) ** 2 for d in self.deltas), default=0.0) or None
        return EnvOracle(best=0, kappa=self.kappa, bernstein_B=1.0,
                         exact_B=exact, excess_laws=tuple(laws))


# ---------------------------------------------------------------------------
# Hedge: Markov-chain experts
# ---------------------------------------------------------------------------

class MarkovExperts(HedgeEnv):
    """Binary z_t from an order-m chain; experts are all maps {0,1}^m -> {0,1}.

    Expert e (an integer of 2^m bits) predicts bit (e >> c) & 1 on context c,
    where c encodes the previous m outcomes with the most recent at the least
    significant bit; the chain starts from the all-zeros context.
    """
    family = "markov"

    def __init__(self, m: int, p: Sequence[float]):
        if not 1 <= m <= 4:
            raise ContractViolation("order m must lie in 1..4 (2^(2^m) experts)")
        p_arr = np.asarray(list(p), dtype=float)
        if p_arr.size != 2 ** m:
            raise ContractViolation(f"need 2^{m} transition probabilities")
        if np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
            raise ContractViolation("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p_arr - 0.5) <= 0.0):
            raise ContractViolation(
                "every p_a must differ from 1/2 (Bernstein constant undefined)")
        self.m = int(m)
        self.p = p_arr
        self.n_contexts = 2 ** self.m
        self._K = 2 ** self.n_contexts
        experts = np.arange(self._K, dtype=np.int64)
        # bits[c, e] = expert e's prediction on context c
        self._bits = np.stack([((experts >> c) & 1).astype(float)
                               for c in range(self.n_contexts)])

    @property
    def n_experts(self) -> int:
        return self._K

    def params(self) -> dict:
        return {"m": self.m, "p": [float(x) for x in self.p]}

    def open(self, seed: int) -> MarkovStream:
        return MarkovStream(self, seed)

    def best_expert(self) -> int:
        e = 0
        for c in range(self.n_contexts):
            if self.p[c] >= 0.5:
                e |= 1 << c
        return e

    def oracle(self) -> EnvOracle:
        margins = np.abs(self.p - 0.5)
        B = 1.0 / (2.0 * float(margins.min()))
        laws = [zero_law()]
        for c in range(self.n_contexts):
            hit = 0.5 + float(margins[c])  # P(z equals the majority bit | c)
            laws.append(FiniteDist((1.0, -1.0), (hit, 1.0 - hit),
                                   label=f"context={c:0{self.m}b},disagree"))
        return EnvOracle(best=self.best_expert(), kappa=1.0, bernstein_B=B,
                         exact_B=B, excess_laws=tuple(laws))


# ---------------------------------------------------------------------------
# Hedge: uniform random signs (stochastic worst case)
# ---------------------------------------------------------------------------

class AdversarialSigns(HedgeEnv):
    """Independent fair {0,1} losses: every expert has mean 1/2 (kappa = 0)."""
    family = "signs"

    def __init__(self, K: int = 8):
        if K < 2:
            raise ContractViolation("need at least 2 experts")
        self.K = int(K)

    @property
    def n_experts(self) -> int:
        return self.K

    def params(self) -> dict:
        return {"K": self.K}

    def _draw(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, 2, self.K).astype(float)

    def oracle(self) -> EnvOracle:
        law = FiniteDist((1.0, 0.0, -1.0), (0.25, 0.5, 0.25), label="any-expert")
        return EnvOracle(best=0, kappa=0.0, bernstein_B=1.0, exact_B=0.5,
                         excess_laws=(zero_law(), law))


# ---------------------------------------------------------------------------
# OCO: hinge loss on the unit ball
# ---------------------------------------------------------------------------

_MU_NORM_CACHE: dict[tuple, tuple[float, float]] = {}


def _sphere_mu_norm(d: int, model: str, scale: float) -> tuple[float, float]:
    """Monte-Carlo estimate (with stderr) of ||E[y x]|| for x uniform on the sphere."""
    key = (d, model, round(scale, 12))
    if key not in _MU_NORM_CACHE:
        rng = make_rng(derive_seed(0, ["hinge-mu-norm", d, model, repr(scale)]))
        z = rng.standard_normal((MU_NORM_SAMPLES, d))
        v = z[:, 0] / np.linalg.norm(z, axis=1)  # <x, u_bar> by rotation symmetry
        if model == "noiseless":
            samples = np.abs(v)
        else:
            samples = (2.0 / (1.0 + np.exp(-v / scale)) - 1.0) * v
        est = float(samples.mean())
        se = float(samples.std(ddof=1) / math.sqrt(samples.size))
        _MU_NORM_CACHE[key] = (est, se)
    return _MU_NORM_CACHE[key]


class HingeBall(OcoEnv):
    """Hinge loss 1 - y <x, u> with x uniform on the unit sphere.

    The hinge stays inactive on the unit ball, so the gradient is -y x
    everywhere.  Labels are either the noiseless halfspace sign or a logistic
    flip (the latter exercises small ||mu|| and is not part of the original
    construction).
    """
    family = "hinge"

    def __init__(self, d: int, label_model: str = "noiseless",
                 scale: float = 1.0, u_bar: Sequence[float] | None = None):
        if d < 1:
            raise ContractViolation("dimension must be >= 1")
        if label_model not in ("noiseless", "logistic"):
            raise ContractViolation("label_model must be noiseless or logistic")
        self.d = int(d)
        self.label_model = label_model
        self.scale = float(scale)
        if u_bar is None:
            u = np.zeros(self.d)
            u[0] = 1.0
        else:
            u = np.asarray(list(u_bar), dtype=float)
            n = float(np.linalg.norm(u))
            if abs(n - 1.0) > 1e-9:
                raise ContractViolation("u_bar must be a unit vector")
        self.u_bar = u
        self.domain = BallDomain(self.d, 1.0)
        self.D = self.domain.diameter
        self.G = 1.0

    def params(self) -> dict:
        out: dict = {"d": self.d, "model": self.label_model}
        if self.label_model == "logistic":
            out["scale"] = self.scale
        return out

    def _draw(self, rng: np.random.Generator) -> LossEvent:
        z = rng.standard_normal(self.d)
        x = z / float(np.linalg.norm(z))
        v = float(x @ self.u_bar)
        if self.label_model == "noiseless":
            y = 1 if v >= 0 else -1
        else:
            y = 1 if rng.random() < 1.0 / (1.0 + math.exp(-v / self.scale)) else -1
        return LossEvent(kind=self.family, x=x, y=y)

    def loss(self, event: LossEvent, u: np.ndarray) -> float:
        return 1.0 - event.y * float(np.asarray(event.x) @ u)

    def grad(self, event: LossEvent, u: np.ndarray) -> np.ndarray:
        return -event.y * np.asarray(event.x)

    def oracle(self) -> EnvOracle:
        mu_norm, mu_se = _sphere_mu_norm(self.d, self.label_model, self.scale)
        if mu_norm <= 5.0 * mu_se:
            raise ContractViolation(
                "||E[yx]|| is indistinguishable from 0: nothing to learn")
        lambda_max = 1.0 / self.d
        B = 2.0 * lambda_max / mu_norm
        extras = {"mu_norm": mu_norm, "mu_norm_stderr": mu_se,
                  "lambda_max": lambda_max}
        if self.label_model == "noiseless":
            extras["bernstein_cap"] = (8.0 / 0.35) / math.sqrt(self.d)
        return EnvOracle(best=self.u_bar.copy(), kappa=1.0, bernstein_B=B,
                         exact_B=B, excess_laws=None, extras=extras)

    def representative_points(self) -> np.ndarray:
        rng = make_rng(derive_seed(0, ["hinge-points", self.d, self.label_model]))
        pts = [self.u_bar, -self.u_bar, 0.5 * self.u_bar, np.zeros(self.d)]
        for _ in range(8):
            z = rng.standard_normal(self.d)
            r = rng.random() ** (1.0 / self.d)
            pts.append(r * z / float(np.linalg.norm(z)))
        return np.stack(pts)


# ---------------------------------------------------------------------------
# OCO: absolute loss on the unit interval
# ---------------------------------------------------------------------------

class AbsoluteLoss(OcoEnv):
    """Absolute loss |u - x| on [0, 1].

    Variants: 'uniform' (density 1), 'truncated' (normal truncated to [0, 1],
    density bounded below by its value at the endpoints), and 'two-point'
    (atoms at a and b with P(a) = p != 1/2).  The optimal point is the median.
    The excess variable (u - u*) sign(u - x) has two atoms for every variant.
    sign(0) is resolved as -1 (the left subgradient, valid for |u - x|), and
    the same convention is used by grad() so that sampled excess moments match
    the closed-form laws exactly, atoms included.
    """
    family = "abs"

    def __init__(self, variant: str = "uniform", a: float = 0.2, b: float = 0.7,
                 p: float = 0.8, loc: float = 0.3, scale: float = 0.5):
        if variant not in ("uniform", "two-point", "truncated"):
            raise ContractViolation("variant must be uniform, two-point or truncated")
        self.variant = variant
        self.domain = BoxDomain((0.0,), (1.0,))
        self.D = 1.0
        self.G = 1.0
        if variant == "two-point":
            if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0 and a != b):
                raise ContractViolation("two-point atoms must be distinct in [0, 1]")
            if abs(p - 0.5) <= 0.0:
                raise ContractViolation("two-point requires p != 1/2")
            self.a, self.b, self.p = float(a), float(b), float(p)
        elif variant == "truncated":
            if scale <= 0:
                raise ContractViolation("scale must be positive")
            self.loc, self.scale = float(loc), float(scale)
            alpha = (0.0 - self.loc) / self.scale
            beta = (1.0 - self.loc) / self.scale
            self._tn = stats.truncnorm(alpha, beta, loc=self.loc, scale=self.scale)
            self.min_density = float(min(self._tn.pdf(0.0), self._tn.pdf(1.0)))

    def params(self) -> dict:
        if self.variant == "two-point":
            return {"variant": self.variant, "a": self.a, "b": self.b, "p": self.p}
        if self.variant == "truncated":
            return {"variant": self.variant, "loc": self.loc, "scale": self.scale}
        return {"variant": self.variant}

    def _draw(self, rng: np.random.Generator) -> LossEvent:
        if self.variant == "uniform":
            x = float(rng.random())
        elif self.variant == "two-point":
            x = self.a if rng.random() < self.p else self.b
        else:
            x = float(self._tn.ppf(rng.random()))
        return LossEvent(kind=self.family, x=x)

    def loss(self, event: LossEvent, u: np.ndarray) -> float:
        return abs(float(u[0]) - event.x)

    def grad(self, event: LossEvent, u: np.ndarray) -> np.ndarray:
        return np.array([1.0 if float(u[0]) > event.x else -1.0])

    def median(self) -> float:
        if self.variant == "uniform":
            return 0.5
        if self.variant == "two-point":
            return self.a if self.p > 0.5 else self.b
        return float(self._tn.ppf(0.5))

    def _cdf_strict(self, w: float) -> float:
        """P(x < w); differs from the cdf only at the two-point atoms."""
        if self.variant == "uniform":
            return min(max(w, 0.0), 1.0)
        if self.variant == "two-point":
            return (self.p if self.a < w else 0.0) + (1.0 - self.p if self.b < w else 0.0)
        return float(self._tn.cdf(w))

    def oracle(self) -> EnvOracle:
        u_star = self.median()
        if self.variant == "uniform":
            B = 0.5
        elif self.variant == "two-point":
            B = 1.0 / abs(2.0 * self.p - 1.0)
        else:
            B = 1.0 / (2.0 * self.min_density)
        laws = [zero_law()]
        for w in self.representative_points()[:, 0]:
            if w == u_star:
                continue
            plus = self._cdf_strict(float(w))
            mag = float(w) - u_star
            laws.append(FiniteDist((mag, -mag), (plus, 1.0 - plus),
                                   label=f"w={float(w):g}"))
        exact = max(law.second_moment() / law.mean()
                    for law in laws[1:] if law.mean() > 0)
        return EnvOracle(best=np.array([u_star]), kappa=1.0, bernstein_B=B,
                         exact_B=min(exact, B), excess_laws=tuple(laws),
                         extras={"median": u_star})

    def representative_points(self) -> np.ndarray:
        return (np.arange(21) / 20.0).reshape(-1, 1)


# ---------------------------------------------------------------------------
# Registry, parsing, serialization
# ---------------------------------------------------------------------------

ENV_FAMILIES = {
    "gap": GapExperts,
    "kappa": KappaExperts,
    "markov": MarkovExperts,
    "hinge": HingeBall,
    "abs": AbsoluteLoss,
    "signs": AdversarialSigns,
}

_PARAM_NAMES = {
    "gap": {"alpha": float, "K": int, "mu0": float, "noise": int},
    "kappa": {"kappa": float, "K": int, "deltas": list},
    "markov": {"m": int, "p": list},
    "hinge": {"d": int, "model": str, "scale": float},
    "abs": {"variant": str, "a": float, "b": float, "p": float,
            "loc": float, "scale": float},
    "signs": {"K": int},
}

_CTOR_KEY = {"model": "label_model"}


def make_env(family: str, **params):
    if family not in ENV_FAMILIES:
        raise ContractViolation(f"unknown environment family {family!r}")
    known = _PARAM_NAMES[family]
    kwargs = {}
    for key, value in params.items():
        if key not in known:
            raise ContractViolation(f"unknown parameter {key!r} for family {family!r}")
        kwargs[_CTOR_KEY.get(key, key)] = value
    return ENV_FAMILIES[family](**kwargs)


def _parse_scalar(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_env_id(spec: str):
    """Parse the 'family:key=value,...' mini-language.

    A bare leading token names the variant (e.g. 'abs:two-point,a=0.2');
    bare continuation tokens extend the previous key into a list (e.g.
    'markov:m=1,p=0.9,0.1').
    """
    family, _, rest = spec.partition(":")
    family = family.strip()
    if family not in ENV_FAMILIES:
        raise ContractViolation(f"unknown environment family {family!r}")
    params: dict = {}
    current: str | None = None
    for token in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in token:
            key, _, value = token.partition("=")
            current = key.strip()
            params[current] = _parse_scalar(value.strip())
        elif current is None:
            if family == "abs":
                params["variant"] = token
            else:
                raise ContractViolation(f"stray token {token!r} in env spec {spec!r}")
        else:
            prev = params[current]
            params[current] = (prev if isinstance(prev, list) else [prev])
            params[current].append(_parse_scalar(token))
    return make_env(family, **params)


def format_env_id(family: str, params: dict) -> str:
    parts = []
    for key, value in params.items():
        if isinstance(value, list):
            parts.append(f"{key}=" + ",".join(f"{v:g}" if isinstance(v, float)
                                              else str(v) for v in value))
        elif isinstance(value, float):
            parts.append(f"{key}={value:g}")
        else:
            parts.append(f"{key}={value}")
    return family + ":" + ",".join(parts)


def env_to_config(env) -> dict:
    return {"family": env.family, "params": env.params()}


def env_from_config(config: dict):
    unknown = set(config) - {"family", "params", "id"}
    if unknown:
        raise ContractViolation(f"unknown env config keys {sorted(unknown)}")
    return make_env(config["family"], **config.get("params", {}))


# ---------------------------------------------------------------------------
# Sampling helpers for moment and CGF checks
# ---------------------------------------------------------------------------

def hedge_excess_samples(env: HedgeEnv, n: int, seed: int) -> np.ndarray:
    """(n, K) matrix of excess losses l^k - l^{k*} from n sampled rounds."""
    stream = env.open(seed)
    best = env.oracle().best
    out = np.empty((n, env.n_experts))
    for i in range(n):
        losses = stream.next()
        out[i] = losses - losses[best]
    return out


def oco_excess_samples(env: OcoEnv, points: np.ndarray, n: int,
                       seed: int) -> np.ndarray:
    """(n, P) matrix of excess gradients <u_p - u*, grad l(u_p)> at given points."""
    stream = env.open(seed)
    u_star = np.atleast_1d(np.asarray(env.oracle().best, dtype=float))
    pts = np.atleast_2d(points)
    out = np.empty((n, pts.shape[0]))
    for i in range(n):
        event = stream.next()
        for j, u in enumerate(pts):
            out[i, j] = float((u - u_star) @ env.grad(event, u))
    return out
