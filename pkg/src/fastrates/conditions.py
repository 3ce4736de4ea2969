"""Numerical embodiment of the fast-rates theory.

Exact cumulant generating functions of bounded excess-loss variables, the
exponential-stochastic-inequality (ESI) calculus, the second-order squeezer
inequality together with its admissible constant, the Bernstein-to-Central
conversion, and the tuned regret bounds used by the harness for domination
checks.  Everything here is pure: finite distributions in, numbers out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .core import ContractViolation, UnsupportedOperation

# Validity cap of the exp-sandwich step (e^h - h - 1 <= h^2 for h <= 1.79328)
# used in deriving central bounds from Bernstein moments.
SANDWICH_ETA_MAX = 1.79328

ATOL = 1e-12


class DataInconsistency(RuntimeError):
    """Sampled moments contradict the claimed optimality of f*."""


# ---------------------------------------------------------------------------
# Finite distributions of excess losses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteDist:
    """Finite distribution of an excess-loss variable supported in [-1, 1]."""
    values: tuple[float, ...]
    probs: tuple[float, ...]
    label: str = ""

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise ContractViolation("atoms must be matching nonempty value/prob lists")
        if np.any(p < -ATOL):
            raise ContractViolation("atom probabilities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > ATOL:
            raise ContractViolation(f"atom probabilities must sum to 1, got {p.sum()}")
        if np.any(v < -1.0 - ATOL) or np.any(v > 1.0 + ATOL):
            raise ContractViolation("excess-loss atoms must lie in [-1, 1]")

    @property
    def v(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def mean(self) -> float:
        return float(self.v @ self.p)

    def second_moment(self) -> float:
        return float((self.v ** 2) @ self.p)


def zero_law(label: str = "f*") -> FiniteDist:
    """The excess law of the optimal predictor itself: a point mass at 0."""
    return FiniteDist((0.0,), (1.0,), label=label)


def _atoms(dist) -> tuple[np.ndarray, np.ndarray]:
    """Accept a FiniteDist or a (values, probs) pair; ESI checks allow any reals."""
    if isinstance(dist, FiniteDist):
        return dist.v, dist.p
    values, probs = dist
    return np.asarray(values, dtype=float), np.asarray(probs, dtype=float)


# ---------------------------------------------------------------------------
# Normalized cumulant generating function
# ---------------------------------------------------------------------------

def exact_cgf(dist: FiniteDist, eta: float) -> float:
    """(1/eta) ln E[exp(-eta x)] for a finite law; -E[x] at eta = 0 by continuity."""
    if eta < 0:
        raise ContractViolation("eta must be nonnegative")
    if eta == 0.0:
        return -dist.mean()
    mask = dist.p > 0
    log_mgf = float(logsumexp(np.log(dist.p[mask]) - eta * dist.v[mask]))
    return log_mgf / eta


@dataclass(frozen=True)
class CgfProfile:
    """Worst-case normalized CGF over a class of predictors on an eta grid."""
    etas: tuple[float, ...]
    values: tuple[float, ...]
    per_f: tuple[tuple[float, ...], ...] = ()
    labels: tuple[str, ...] = ()

    def validate(self, tol: float = 1e-9) -> None:
        etas = np.asarray(self.etas)
        vals = np.asarray(self.values)
        if np.any(np.diff(vals) < -tol):
            raise ContractViolation("cgf profile must be nondecreasing in eta")
        if np.any(np.abs(vals) > 1.0 + tol):
            raise ContractViolation("cgf profile values must lie in [-1, 1]")
        if np.any(vals > etas / 2.0 + tol):
            raise ContractViolation("cgf profile must respect the eta/2 cap")

    def to_json_dict(self) -> dict:
        per_f = {label or f"f{i}": list(curve)
                 for i, (label, curve) in enumerate(zip(self.labels, self.per_f))}
        return {"eta_grid": list(self.etas), "values": list(self.values),
                "per_f": per_f}

    @classmethod
    def from_json_dict(cls, data: dict) -> "CgfProfile":
        labels = tuple(data.get("per_f", {}))
        per_f = tuple(tuple(curve) for curve in data.get("per_f", {}).values())
        return cls(tuple(data["eta_grid"]), tuple(data["values"]), per_f, labels)


def default_eta_grid(n: int = 64, lo: float = 2.0 ** -12,
                     hi: float = 1.79) -> np.ndarray:
    """Log-spaced eta grid capped below the sandwich validity bound."""
    return np.geomspace(lo, hi, n)


def cgf_profile(oracle, eta_grid: Sequence[float] | np.ndarray) -> CgfProfile:
    """Max of exact_cgf over an oracle's exact excess laws on a grid.

    `oracle` may be anything with an `excess_laws` attribute, or directly an
    iterable of FiniteDist.
    """
    laws = getattr(oracle, "excess_laws", oracle)
    if laws is None:
        raise UnsupportedOperation("oracle provides no exact excess laws")
    laws = list(laws)
    if not laws:
        raise UnsupportedOperation("empty excess-law list")
    etas = [float(e) for e in eta_grid]
    per_f = tuple(tuple(exact_cgf(law, e) for e in etas) for law in laws)
    values = tuple(max(col) for col in zip(*per_f))
    labels = tuple(law.label for law in laws)
    profile = CgfProfile(tuple(etas), values, per_f, labels)
    profile.validate()
    return profile


# ---------------------------------------------------------------------------
# Bernstein to Central conversion
# ---------------------------------------------------------------------------

def central_bound(B: float, kappa: float, eta: float) -> float:
    """Upper bound on the CGF envelope implied by a (B, kappa)-Bernstein condition.

    Evaluates sup_{m in [0,1]} (eta*B*m^kappa - m): the interior stationary
    point gives ((1-kappa)/kappa) * (B*eta*kappa)^(1/(1-kappa)) when it lies in
    range, the boundary m = 1 gives eta*B - 1 otherwise.  Valid as a bound on
    the CGF for eta <= SANDWICH_ETA_MAX.
    """
    if B <= 0:
        raise ContractViolation("Bernstein constant B must be positive")
    if not 0.0 <= kappa <= 1.0:
        raise ContractViolation("kappa must lie in [0, 1]")
    if eta < 0:
        raise ContractViolation("eta must be nonnegative")
    if kappa == 0.0:
        return eta * B
    if kappa == 1.0:
        return max(0.0, eta * B - 1.0)
    if B * kappa * eta <= 1.0:
        return (1.0 - kappa) / kappa * (B * eta * kappa) ** (1.0 / (1.0 - kappa))
    return eta * B - 1.0


# ---------------------------------------------------------------------------
# Second-order adjustment: admissible constant and squeezer inequality
# ---------------------------------------------------------------------------

def admissible_c(eta: float, gamma: float) -> float:
    """Largest constant c for the second-order adjustment at rates (eta, gamma).

    Requires 0 <= eta <= gamma.  At eta = 0 any c works (the adjusted
    inequality is an identity); returns 1/2, the continuity value along the
    gamma = 2*eta diagonal where the constant is 1/(1 + sqrt(1 + 4 eta^2)).

    The defining expression (sqrt(2|2 eta - gamma| + gamma^2 + 1)
    - |2 eta - gamma| - 1) / (4 eta^2) is evaluated in the rationalized form
    (gamma - eta) / (eta (sqrt(...) + |2 eta - gamma| + 1)), which is
    algebraically identical but avoids catastrophic cancellation at small eta.
    """
    if eta < 0 or gamma < eta:
        raise ContractViolation("need 0 <= eta <= gamma")
    if eta == 0.0:
        return 0.5
    a = abs(2.0 * eta - gamma)
    root = math.sqrt(2.0 * a + gamma * gamma + 1.0)
    return (gamma - eta) / (eta * (root + a + 1.0))


@dataclass(frozen=True)
class SqueezerReport:
    passed: bool
    slack: float
    vacuous: bool
    c: float


def squeezer_check(dist: FiniteDist, eta: float, gamma: float,
                   epsilon: float, tol: float = 1e-9) -> SqueezerReport:
    """Verify the second-order adjustment on one law.

    Hypothesis: E[exp(-gamma x)] <= exp(gamma epsilon).  Conclusion:
    E[exp(c eta^2 x^2 - eta x)] <= exp(c eta^2 epsilon^2 + eta epsilon) with
    c = admissible_c(eta, gamma).  The slack is reported in log domain
    (RHS - LHS); a negative slack beyond tol on a satisfied hypothesis is an
    implementation bug, not a property of the data.
    """
    if not -1.0 <= epsilon <= 1.0:
        raise ContractViolation("epsilon must lie in [-1, 1]")
    c = admissible_c(eta, gamma)
    v, p = dist.v, dist.p
    mask = p > 0
    logp = np.log(p[mask])
    x = v[mask]
    if gamma > 0:
        hyp_lhs = float(logsumexp(logp - gamma * x))
        hypothesis_holds = hyp_lhs <= gamma * epsilon + tol
    else:
        hypothesis_holds = True  # gamma = 0: hypothesis reads 1 <= 1
    if not hypothesis_holds:
        return SqueezerReport(passed=True, slack=math.nan, vacuous=True, c=c)
    lhs = float(logsumexp(logp + c * eta * eta * x * x - eta * x))
    rhs = c * eta * eta * epsilon * epsilon + eta * epsilon
    slack = rhs - lhs
    return SqueezerReport(passed=bool(slack >= -tol), slack=slack, vacuous=False, c=c)


# ---------------------------------------------------------------------------
# ESI calculus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EsiReport:
    is_esi: bool
    log_mgf: float            # ln E[e^X]
    mean: float
    mean_nonpositive: bool
    tail_checks: tuple[tuple[float, float, bool], ...]  # (delta, P(X >= -ln d), ok)

    @property
    def all_hold(self) -> bool:
        return (not self.is_esi) or (
            self.mean_nonpositive and all(ok for _, _, ok in self.tail_checks))


def esi_check(dist, deltas: Sequence[float] = (0.5, 0.1, 0.01),
              tol: float = 1e-9) -> EsiReport:
    """Check E[e^X] <= 1 and, when it holds, the negativity consequences.

    Accepts a FiniteDist or a (values, probs) pair; values may be any reals
    here since ESI variables are not confined to [-1, 1].
    """
    v, p = _atoms(dist)
    mask = p > 0
    log_mgf = float(logsumexp(np.log(p[mask]) + v[mask]))
    is_esi = log_mgf <= tol
    mean = float(v @ p)
    tails = []
    for d in deltas:
        thresh = -math.log(d)
        prob = float(p[v >= thresh - tol].sum())
        tails.append((float(d), prob, bool(prob <= d + tol)))
    return EsiReport(is_esi=is_esi, log_mgf=log_mgf, mean=mean,
                     mean_nonpositive=bool(mean <= tol),
                     tail_checks=tuple(tails))


def esi_mixture_check(family_values: np.ndarray, outcome_probs: np.ndarray,
                      weights: np.ndarray, tol: float = 1e-9) -> dict:
    """Convex-combination property on a family over a common outcome space.

    family_values[f, w] is X^f evaluated at outcome w; the mixture variable is
    sum_f weights[f] * X^f pointwise.  If every X^f is ESI then so must be the
    mixture.
    """
    fam = np.asarray(family_values, dtype=float)
    probs = np.asarray(outcome_probs, dtype=float)
    wts = np.asarray(weights, dtype=float)
    per_f = [esi_check((fam[i], probs), tol=tol) for i in range(fam.shape[0])]
    mix = esi_check((wts @ fam, probs), tol=tol)
    all_members_esi = all(r.is_esi for r in per_f)
    return {
        "members_esi": all_members_esi,
        "mixture_esi": mix.is_esi,
        "holds": (not all_members_esi) or mix.is_esi,
        "mixture_log_mgf": mix.log_mgf,
    }


def esi_chain_check(steps: Sequence, tol: float = 1e-9) -> dict:
    """Chain rule on a finite filtration by exhaustive path enumeration.

    `steps[t]` maps a history (tuple of atom indices from earlier steps) to a
    (values, probs) conditional law.  A plain (values, probs) pair is treated
    as history-independent.  Verifies that if every conditional is ESI then
    the sum over steps is ESI, by summing prob * exp(total) over all paths.
    """
    if len(steps) > 5:
        raise ContractViolation("chain enumeration supported up to length 5")

    def law_at(step, history):
        return _atoms(step(history) if callable(step) else step)

    conditionals_esi = True
    total_mgf = 0.0

    def walk(t: int, history: tuple, log_prob: float, total: float) -> None:
        nonlocal conditionals_esi, total_mgf
        if t == len(steps):
            total_mgf += math.exp(log_prob + total)
            return
        v, p = law_at(steps[t], history)
        if not esi_check((v, p), tol=tol).is_esi:
            conditionals_esi = False
        for i in range(v.size):
            if p[i] > 0:
                walk(t + 1, history + (i,), log_prob + math.log(p[i]), total + v[i])

    walk(0, (), 0.0, 0.0)
    sum_esi = total_mgf <= 1.0 + tol
    return {
        "conditionals_esi": conditionals_esi,
        "sum_esi": sum_esi,
        "holds": (not conditionals_esi) or sum_esi,
        "sum_mgf": total_mgf,
    }


# ---------------------------------------------------------------------------
# Tuned regret bounds
# ---------------------------------------------------------------------------

def theorem_bound(K_T: float, gamma: float, eps2g: float, T: int) -> float:
    """Luckiness regret bound K/(c gamma) + T eps(2 gamma)(1 + c gamma^2) + 2K.

    `eps2g` is the CGF envelope evaluated at 2 gamma; c is the gamma = 2*eta
    specialization 1/(1 + sqrt(1 + 4 gamma^2)).  gamma = 0 returns +inf.
    """
    if K_T < 0 or gamma < 0 or T < 0:
        raise ContractViolation("theorem_bound inputs must be nonnegative")
    if gamma == 0.0:
        return math.inf
    c = 1.0 / (1.0 + math.sqrt(1.0 + 4.0 * gamma * gamma))
    return K_T / (c * gamma) + T * eps2g * (1.0 + c * gamma * gamma) + 2.0 * K_T


def tuned_gamma(B: float, kappa: float, K_T: float, T: int) -> float:
    """Rate-optimal gamma for a (B, kappa)-Bernstein environment.

    For kappa < 1: (2 K_T (1-kappa) (2B)^(-1/(1-kappa)) / T)^((1-kappa)/(2-kappa)),
    evaluated in log domain so the inner power does not underflow near
    kappa = 1.  At kappa = 1 the expression degenerates; its limit (and the
    value returned) is min(1/2, 1/(2B)).
    """
    if T <= 0:
        raise ContractViolation("horizon must be positive")
    if B <= 0 or K_T <= 0 or not 0.0 <= kappa <= 1.0:
        raise ContractViolation("need B > 0, K_T > 0, kappa in [0, 1]")
    if kappa == 1.0:
        return min(0.5, 1.0 / (2.0 * B))
    log_inner = (math.log(2.0 * K_T * (1.0 - kappa)) - math.log(T)
                 - math.log(2.0 * B) / (1.0 - kappa))
    return math.exp(log_inner * (1.0 - kappa) / (2.0 - kappa))


def expected_regret_bound(B: float, kappa: float, K_T: float, T: int) -> float:
    """Closed-form expected-regret bound (1+4B)(K_T/4)^(1/(2-k)) T^((1-k)/(2-k)) + (5-k) K_T."""
    if B <= 0 or K_T < 0 or T < 0 or not 0.0 <= kappa <= 1.0:
        raise ContractViolation("invalid inputs to expected_regret_bound")
    main = (1.0 + 4.0 * B) * (K_T / 4.0) ** (1.0 / (2.0 - kappa)) \
        * T ** ((1.0 - kappa) / (2.0 - kappa))
    return main + (5.0 - kappa) * K_T


def optimized_theorem_bound(K_T: float, B: float, kappa: float, T: int,
                            gamma_grid: Sequence[float] | None = None) -> tuple[float, float]:
    """Minimize theorem_bound over a gamma grid with the central-bound envelope.

    Returns (bound, argmin gamma).  Default grid: 64 log-spaced points in
    [2^-12, 1/2] (2*gamma stays within the sandwich validity range).
    """
    if gamma_grid is None:
        gamma_grid = np.geomspace(2.0 ** -12, 0.5, 64)
    best = (math.inf, float(gamma_grid[0]))
    for g in gamma_grid:
        val = theorem_bound(K_T, float(g), central_bound(B, kappa, 2.0 * float(g)), T)
        if val < best[0]:
            best = (val, float(g))
    return best


# ---------------------------------------------------------------------------
# Bernstein profiles (smallest B per kappa)
# ---------------------------------------------------------------------------

MEAN_FLOOR = 1e-12


@dataclass(frozen=True)
class BernsteinProfile:
    kappas: tuple[float, ...]
    values: tuple[float, ...]          # sup_f of m2 / max(m1, floor)^kappa
    stderrs: tuple[float, ...]         # zero in exact mode
    argmax: tuple[int, ...] = field(default=())


def _ratio(m2: float, m1: float, kappa: float) -> float:
    return m2 / max(m1, MEAN_FLOOR) ** kappa


def bernstein_profile(data, kappa_grid: Sequence[float]) -> BernsteinProfile:
    """Per-kappa smallest Bernstein constant over a predictor family.

    `data` is either a list of exact FiniteDist excess laws, or a list of 1-d
    sample arrays (one per predictor).  Exact zero laws (the optimum itself)
    are excluded from the sup.  MC mode reports delta-method standard errors
    of the sup-achieving ratio (with the denominator derivative taken at the
    floored mean, so a mean that is statistically indistinguishable from zero
    yields an honestly enormous standard error) and raises DataInconsistency
    if a predictor's sampled mean is negative beyond 4 standard errors.
    """
    data = list(data)
    if not data:
        raise ContractViolation("empty predictor family")
    if all(isinstance(d, FiniteDist) for d in data):
        moments = [(law.second_moment(), law.mean(), 0.0, 0.0, 0.0) for law in data]
        exact = True
    else:
        exact = False
        moments = []
        for arr in data:
            x = np.asarray(arr, dtype=float)
            n = x.size
            m1, m2 = float(x.mean()), float((x * x).mean())
            var1 = float(x.var(ddof=1)) / n if n > 1 else 0.0
            var2 = float((x * x).var(ddof=1)) / n if n > 1 else 0.0
            cov = float(np.cov(x, x * x, ddof=1)[0, 1]) / n if n > 1 else 0.0
            if m1 < -4.0 * math.sqrt(max(var1, 0.0)):
                raise DataInconsistency(
                    f"sampled excess mean {m1} negative beyond 4 sigma; "
                    "the designated optimum appears not to be optimal")
            moments.append((m2, m1, var1, var2, cov))

    values, stderrs, argmax = [], [], []
    for kappa in kappa_grid:
        best_val, best_i, best_se = -math.inf, -1, 0.0
        for i, (m2, m1, var1, var2, cov) in enumerate(moments):
            if m2 == 0.0 and abs(m1) <= MEAN_FLOOR:
                continue  # the optimum's own law contributes nothing
            val = _ratio(m2, m1, kappa)
            if val > best_val:
                m1_eff = max(m1, MEAN_FLOOR)
                d_m2 = 1.0 / m1_eff ** kappa
                d_m1 = -kappa * m2 / m1_eff ** (kappa + 1.0)
                se = math.sqrt(max(
                    d_m2 * d_m2 * var2 + d_m1 * d_m1 * var1 + 2 * d_m2 * d_m1 * cov,
                    0.0))
                best_val, best_i, best_se = val, i, se
        if best_i < 0:
            best_val, best_se = 0.0, 0.0
        values.append(best_val)
        stderrs.append(0.0 if exact else best_se)
        argmax.append(best_i)
    return BernsteinProfile(tuple(float(k) for k in kappa_grid), tuple(values),
                            tuple(stderrs), tuple(argmax))
