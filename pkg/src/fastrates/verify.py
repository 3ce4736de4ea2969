"""Theory verification suites.

Brute-force and exact checks of the inequalities the fast-rate analysis rests
on: the second-order squeezer on random distributions with tight epsilon, the
ESI calculus (negativity, convex combination, chain rule), domination of every
built-in oracle's CGF envelope by its Bernstein-implied central bound, the
admissible-constant identities, and oracle self-consistency of the Bernstein
constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import environments
from .conditions import (FiniteDist, admissible_c, bernstein_profile,
                         central_bound, cgf_profile, default_eta_grid,
                         esi_chain_check, esi_check, esi_mixture_check)
from .core import derive_seed, make_rng


@dataclass
class CheckResult:
    name: str
    passed: bool
    slack: float       # worst-case margin; negative means failure
    detail: str = ""


def checks_to_json_dict(results: list["CheckResult"]) -> dict:
    return {"checks": [{"name": r.name, "pass": r.passed,
                        "slack": None if math.isnan(r.slack) else r.slack,
                        "detail": r.detail} for r in results]}


def builtin_envs() -> list:
    """The environment set exercised by verify/acceptance oracles."""
    return [
        environments.GapExperts(alpha=0.2, K=8),
        environments.GapExperts(alpha=0.2, K=8, noise=0),
        environments.KappaExperts(kappa=0.0, K=8),
        environments.KappaExperts(kappa=0.5, K=8),
        environments.KappaExperts(kappa=1.0, K=8),
        environments.MarkovExperts(m=1, p=[0.9, 0.1]),
        environments.AbsoluteLoss("uniform"),
        environments.AbsoluteLoss("two-point", a=0.2, b=0.7, p=0.8),
        environments.AbsoluteLoss("truncated", loc=0.3, scale=0.5),
        environments.AdversarialSigns(K=8),
        environments.HingeBall(d=4),
    ]


def random_finite_dist(rng: np.random.Generator, n_atoms: int = 5) -> FiniteDist:
    values = rng.uniform(-1.0, 1.0, n_atoms)
    probs = rng.dirichlet(np.ones(n_atoms))
    return FiniteDist(tuple(values), tuple(probs))


# ---------------------------------------------------------------------------
# Squeezer sweep
# ---------------------------------------------------------------------------

def check_squeezer(samples: int = 10_000, seed: int = 0,
                   grid_size: int = 8, tol: float = 1e-9) -> CheckResult:
    """Random distributions x (eta, gamma) grid with tight epsilon: zero failures.

    Vectorizes the grid per distribution (the scalar squeezer_check is the
    reference; the unit tests pin both to agree).  Epsilon is set tight at
    exact_cgf(dist, gamma), so the hypothesis holds with equality and the
    conclusion must hold by the second-order adjustment theorem.
    """
    rng = make_rng(derive_seed(seed, ["verify", "squeezer"]))
    eta_grid = np.geomspace(0.01, 1.5, grid_size)
    gamma_grid = np.geomspace(0.01, 2.0, grid_size)
    pairs = [(e, g) for e in eta_grid for g in gamma_grid if g >= e]
    etas = np.array([p[0] for p in pairs])
    gammas = np.array([p[1] for p in pairs])
    a = np.abs(2.0 * etas - gammas)
    roots = np.sqrt(2.0 * a + gammas ** 2 + 1.0)
    cs = (gammas - etas) / (etas * (roots + a + 1.0))
    worst = math.inf
    failures = 0
    for _ in range(samples):
        values = rng.uniform(-1.0, 1.0, 5)
        logp = np.log(rng.dirichlet(np.ones(5)))
        # eps per pair: (1/gamma) ln E e^{-gamma x}, computed tight.
        mgf_g = logp[None, :] - gammas[:, None] * values[None, :]
        m = mgf_g.max(axis=1, keepdims=True)
        eps = (np.log(np.exp(mgf_g - m).sum(axis=1, keepdims=True)) + m)[:, 0] / gammas
        lhs_exp = (logp[None, :]
                   + (cs * etas ** 2)[:, None] * values[None, :] ** 2
                   - etas[:, None] * values[None, :])
        m2 = lhs_exp.max(axis=1, keepdims=True)
        lhs = (np.log(np.exp(lhs_exp - m2).sum(axis=1, keepdims=True)) + m2)[:, 0]
        rhs = cs * etas ** 2 * eps ** 2 + etas * eps
        slack = float((rhs - lhs).min())
        worst = min(worst, slack)
        if slack < -tol:
            failures += 1
    checked = samples * len(pairs)
    return CheckResult("squeezer", failures == 0, worst,
                       f"{checked} evaluations, {failures} failures")


# ---------------------------------------------------------------------------
# ESI calculus
# ---------------------------------------------------------------------------

def _shifted_esi(rng: np.random.Generator, n_atoms: int) -> tuple[np.ndarray, np.ndarray]:
    # Arbitrary variable recentred so that E[e^X] = 1 exactly (boundary ESI).
    values = rng.uniform(-2.0, 2.0, n_atoms)
    probs = rng.dirichlet(np.ones(n_atoms))
    values = values - math.log(float(probs @ np.exp(values)))
    return values, probs


def check_esi(fixtures: int = 1000, seed: int = 0) -> CheckResult:
    rng = make_rng(derive_seed(seed, ["verify", "esi"]))
    worst = math.inf
    failures = 0
    for i in range(fixtures):
        n = int(rng.integers(2, 6))
        v, p = _shifted_esi(rng, n)
        rep = esi_check((v, p))
        if not (rep.is_esi and rep.all_hold):
            failures += 1
        worst = min(worst, -rep.log_mgf, -rep.mean)
        # Convex combination on a random family over a common outcome space.
        n_f, n_w = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        outcome_p = rng.dirichlet(np.ones(n_w))
        fam = np.empty((n_f, n_w))
        for f in range(n_f):
            raw = rng.uniform(-2.0, 2.0, n_w)
            fam[f] = raw - math.log(float(outcome_p @ np.exp(raw)))
        mix = esi_mixture_check(fam, outcome_p, rng.dirichlet(np.ones(n_f)))
        if not mix["holds"]:
            failures += 1
        worst = min(worst, -mix["mixture_log_mgf"])
        # Chain rule on history-dependent conditionals, length <= 5.
        length = int(rng.integers(1, 6))
        n_atoms = 3
        steps = []
        for t in range(length):
            table = {}
            for flat in range(n_atoms ** t):
                history = []
                rem = flat
                for _ in range(t):
                    history.append(rem % n_atoms)
                    rem //= n_atoms
                table[tuple(history)] = _shifted_esi(rng, n_atoms)
            steps.append(lambda history, _table=table: _table[history])
        chain = esi_chain_check(steps)
        if not chain["holds"]:
            failures += 1
        worst = min(worst, 1.0 - chain["sum_mgf"] + 1e-15)
    return CheckResult("esi", failures == 0, worst,
                       f"{fixtures} fixtures, {failures} failures")


# ---------------------------------------------------------------------------
# CGF domination by the central bound (Bernstein -> Central, numerically)
# ---------------------------------------------------------------------------

def _mc_cgf_with_se(samples: np.ndarray, eta: float) -> tuple[float, float]:
    w = np.exp(-eta * samples)
    m = float(w.mean())
    se_m = float(w.std(ddof=1)) / math.sqrt(w.size)
    return math.log(m) / eta, se_m / (eta * m)


def check_domination(samples: int = 100_000, seed: int = 0) -> CheckResult:
    """exact/MC epsilon(eta) <= central_bound(B, kappa, eta) + 3 sigma, all oracles."""
    grid = default_eta_grid()
    worst = math.inf
    failures = []
    for env in builtin_envs():
        oracle = env.oracle()
        name = env.canonical_id()
        if oracle.excess_laws is not None:
            profile = cgf_profile(oracle, grid)
            for eta, value in zip(profile.etas, profile.values):
                slack = central_bound(oracle.bernstein_B, oracle.kappa, eta) - value
                worst = min(worst, slack)
                if slack < -1e-9:
                    failures.append(f"{name} at eta={eta:g}")
        else:
            points = env.representative_points()
            per_point = environments.oco_excess_samples(
                env, points, samples, derive_seed(seed, ["verify", "dom", name]))
            for j in range(points.shape[0]):
                for eta in grid:
                    est, se = _mc_cgf_with_se(per_point[:, j], float(eta))
                    slack = (central_bound(oracle.bernstein_B, oracle.kappa,
                                           float(eta)) + 3.0 * se - est)
                    worst = min(worst, slack)
                    if slack < 0:
                        failures.append(f"{name} point {j} eta={eta:g}")
    return CheckResult("domination", not failures, worst,
                       f"{len(failures)} violations" + (
                           ": " + "; ".join(failures[:3]) if failures else ""))


# ---------------------------------------------------------------------------
# Admissible constant identities
# ---------------------------------------------------------------------------

def check_admissible(seed: int = 0) -> CheckResult:
    etas = np.geomspace(1e-4, 2.0, 100)
    worst = math.inf
    failures = 0
    # Identity at gamma = 2 eta: formula equals 1/(1 + sqrt(1 + 4 eta^2)).
    for eta in etas:
        direct = admissible_c(float(eta), 2.0 * float(eta))
        closed = 1.0 / (1.0 + math.sqrt(1.0 + 4.0 * eta * eta))
        diff = abs(direct - closed)
        worst = min(worst, 1e-12 - diff)
        if diff > 1e-12:
            failures += 1
    # 1 >= 2 c eta on a dense (eta, gamma) grid.
    for eta in etas:
        for gamma in np.geomspace(float(eta), 4.0, 20):
            c = admissible_c(float(eta), float(gamma))
            margin = 1.0 - 2.0 * c * float(eta)
            worst = min(worst, margin)
            if margin < -1e-12:
                failures += 1
    return CheckResult("admissible", failures == 0, worst,
                       f"{failures} grid violations")


# ---------------------------------------------------------------------------
# Oracle self-consistency
# ---------------------------------------------------------------------------

def _paper_constant(env) -> float | None:
    if isinstance(env, environments.GapExperts):
        return 1.0 / env.alpha
    if isinstance(env, environments.KappaExperts):
        return 1.0
    if isinstance(env, environments.MarkovExperts):
        return 1.0 / (2.0 * float(np.min(np.abs(env.p - 0.5))))
    if isinstance(env, environments.AbsoluteLoss):
        if env.variant == "two-point":
            return 1.0 / abs(2.0 * env.p - 1.0)
        if env.variant == "uniform":
            return 0.5
        return None
    if isinstance(env, environments.HingeBall):
        mu, _ = environments._sphere_mu_norm(env.d, env.label_model, env.scale)
        return 2.0 * (1.0 / env.d) / mu
    if isinstance(env, environments.AdversarialSigns):
        return 1.0
    return None


def _bernstein_consistent(samples: np.ndarray, B: float, kappa: float
                          ) -> tuple[bool, float]:
    """One-sided test of E[x^2] <= B E[x]^kappa from samples of one predictor.

    Uses the equivalent form E[x] >= (E[x^2]/B)^(1/kappa) for kappa > 0, which
    stays well-posed when the mean is statistically indistinguishable from
    zero (the plug-in ratio is not).  Returns (consistent, slack).
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    m1, m2 = float(x.mean()), float((x * x).mean())
    se1 = float(x.std(ddof=1)) / math.sqrt(n)
    se2 = float((x * x).std(ddof=1)) / math.sqrt(n)
    if kappa == 0.0:
        slack = B - (m2 - 3.0 * se2)
        return slack >= 0.0, slack
    needed = (max(m2 - 3.0 * se2, 0.0) / B) ** (1.0 / kappa)
    slack = m1 + 3.0 * se1 - needed
    return slack >= 0.0, slack


def check_oracles(samples: int = 100_000, seed: int = 0) -> CheckResult:
    """MC Bernstein consistency within 3 sigma per predictor; constants exact.

    Two layers: the plug-in sup ratio (restricted to predictors whose sampled
    mean is resolvable at 5 standard errors) must not exceed B + 3 se, and the
    inverted inequality E[x] >= (E[x^2]/B)^(1/kappa), which is well-posed for
    every predictor, must hold within 3 sigma everywhere.
    """
    worst = math.inf
    failures = []
    for env in builtin_envs():
        oracle = env.oracle()
        name = env.canonical_id()
        expected = _paper_constant(env)
        if expected is not None and not math.isclose(
                oracle.bernstein_B, expected, rel_tol=1e-12):
            failures.append(f"{name}: B={oracle.bernstein_B} != {expected}")
        s = derive_seed(seed, ["verify", "bern", name])
        n = max(samples // 10, 1000)
        if env.setting == "hedge":
            data = environments.hedge_excess_samples(env, n, s).T
        else:
            data = environments.oco_excess_samples(
                env, env.representative_points(), n, s).T
        stable = []
        for row in data:
            ok, slack = _bernstein_consistent(row, oracle.bernstein_B,
                                              oracle.kappa)
            worst = min(worst, slack)
            if not ok:
                failures.append(f"{name}: predictor violates Bernstein "
                                f"(slack {slack:.3e})")
            m1 = float(row.mean())
            se1 = float(row.std(ddof=1)) / math.sqrt(row.size)
            if m1 > 5.0 * se1 or (float((row ** 2).mean()) == 0.0):
                stable.append(row)
        if stable and oracle.kappa > 0.0:
            profile = bernstein_profile(stable, [oracle.kappa])
            slack = oracle.bernstein_B + 3.0 * profile.stderrs[0] - profile.values[0]
            worst = min(worst, slack)
            if slack < 0:
                failures.append(f"{name}: resolvable-mean MC profile "
                                f"{profile.values[0]:.4f} > B + 3se")
        elif oracle.kappa == 0.0:
            profile = bernstein_profile(list(data), [0.0])
            slack = oracle.bernstein_B + 3.0 * profile.stderrs[0] - profile.values[0]
            worst = min(worst, slack)
            if slack < 0:
                failures.append(f"{name}: MC profile {profile.values[0]:.4f} "
                                f"> B + 3se")
    return CheckResult("oracles", not failures, worst,
                       "; ".join(failures[:4]) if failures else "all consistent")


ALL_CHECKS = {
    "squeezer": check_squeezer,
    "esi": check_esi,
    "domination": check_domination,
    "admissible": check_admissible,
    "oracles": check_oracles,
}


def run_checks(names: list[str] | None = None, samples: int | None = None,
               seed: int = 0) -> list[CheckResult]:
    selected = names or list(ALL_CHECKS)
    results = []
    for name in selected:
        if name not in ALL_CHECKS:
            raise ValueError(f"unknown check {name!r}; "
                             f"available: {sorted(ALL_CHECKS)}")
        fn = ALL_CHECKS[name]
        kwargs = {"seed": seed}
        if samples is not None and name in ("squeezer", "domination", "oracles"):
            kwargs["samples"] = samples
        if samples is not None and name == "esi":
            kwargs["fixtures"] = samples
        results.append(fn(**kwargs))
    return results
