"""Online learners: Squint, full-matrix MetaGrad, and simple baselines.

Squint aggregates experts over a geometric grid of learning rates and keeps
the defining potential at or below one; its certified regret bound is exposed
for use as a test oracle.  MetaGrad runs one online-Newton slave per learning
rate under a tilted exponential-weights master and supports ball, box and
simplex action sets via Mahalanobis projections.  All potentials and weights
are computed in log domain.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import (BallDomain, BoxDomain, ContractViolation, Domain,
                   SimplexDomain, as_loss_vector, as_pmf)

GRAD_TOL = 1e-9


def _lse(arr: np.ndarray, axis=None):
    """Log-sum-exp without scipy's dispatch overhead (hot path)."""
    if axis is None:
        m = float(arr.max())
        return math.log(float(np.exp(arr - m).sum())) + m
    m = arr.max(axis=axis, keepdims=True)
    return (np.log(np.exp(arr - m).sum(axis=axis, keepdims=True)) + m).reshape(-1)


def squint_eta_grid(horizon_hint: int) -> np.ndarray:
    """Learning-rate grid {2^-j : j = 1..max(1, ceil(log2(T)/2) + 1)}."""
    if horizon_hint < 1:
        raise ContractViolation("horizon hint must be >= 1")
    j_max = max(1, math.ceil(math.log2(horizon_hint) / 2.0) + 1)
    return 2.0 ** -np.arange(1, j_max + 1)


def metagrad_eta_grid(horizon_hint: int, D: float, G: float) -> np.ndarray:
    """Learning-rate grid {2^-i / (5 D G) : i = 0..ceil(log2(T)/2)}."""
    if horizon_hint < 1:
        raise ContractViolation("horizon hint must be >= 1")
    i_max = math.ceil(math.log2(horizon_hint) / 2.0)
    return 2.0 ** -np.arange(0, i_max + 1) / (5.0 * D * G)


# ---------------------------------------------------------------------------
# Squint
# ---------------------------------------------------------------------------

class Squint:
    """Second-order expert aggregation over a learning-rate grid.

    Keeps per-expert cumulative regret R and squared regret V (shared across
    rates).  The prediction weights are proportional to
    pi_k * sum_j rho_j eta_j exp(eta_j R_k - eta_j^2 V_k); the corresponding
    potential sum_k pi_k sum_j rho_j exp(eta_j R_k - eta_j^2 V_k) never
    exceeds one, which is what certifies the regret bound.
    """

    def __init__(self, prior: Sequence[float] | np.ndarray, horizon_hint: int):
        self.prior = as_pmf(prior)
        self.n_experts = self.prior.size
        self.etas = squint_eta_grid(horizon_hint)
        self.rho = np.full(self.etas.size, 1.0 / self.etas.size)
        with np.errstate(divide="ignore"):
            self._log_prior = np.log(self.prior)
            self._log_rho_eta = np.log(self.rho) + np.log(self.etas)
            self._log_rho = np.log(self.rho)
        self.R = np.zeros(self.n_experts)
        self.V = np.zeros(self.n_experts)
        self.t = 0

    def _exponents(self) -> np.ndarray:
        # (K, J) matrix of eta_j R_k - eta_j^2 V_k
        return np.outer(self.R, self.etas) - np.outer(self.V, self.etas ** 2)

    def predict(self) -> np.ndarray:
        logw = self._log_prior + _lse(self._exponents() + self._log_rho_eta, axis=1)
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def update(self, losses: Sequence[float] | np.ndarray,
               weights: np.ndarray | None = None) -> None:
        """Consume one round of losses; `weights` may pass the already-computed
        prediction to avoid recomputing it."""
        l = as_loss_vector(losses)
        if l.size != self.n_experts:
            raise ContractViolation(
                f"expected {self.n_experts} losses, got {l.size}")
        w = self.predict() if weights is None else weights
        h = float(w @ l)
        r = h - l
        self.R += r
        self.V += r * r
        self.t += 1

    def log_potential(self) -> float:
        """ln Phi_t; the update keeps this <= 0 up to float roundoff."""
        mat = self._exponents() + self._log_prior[:, None] + self._log_rho[None, :]
        return _lse(mat)

    def bound(self, comparator: int) -> float:
        """Certified regret bound min_j [eta_j V_k + (-ln pi_k - ln rho_j)/eta_j]."""
        complexities = -self._log_prior[comparator] - self._log_rho
        return float(np.min(self.etas * self.V[comparator] + complexities / self.etas))

    def certified_complexity(self, comparator: int) -> float:
        """-ln pi_k - ln rho_j at the grid point minimizing the certified bound."""
        complexities = -self._log_prior[comparator] - self._log_rho
        j = int(np.argmin(self.etas * self.V[comparator] + complexities / self.etas))
        return float(complexities[j])


# ---------------------------------------------------------------------------
# Mahalanobis projections
# ---------------------------------------------------------------------------

def _check_spd(precision: np.ndarray) -> np.ndarray:
    a = np.asarray(precision, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation("precision must be a square matrix")
    if not np.allclose(a, a.T, atol=1e-8):
        raise ContractViolation("precision must be symmetric")
    sym = (a + a.T) / 2.0
    try:
        np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as exc:
        raise ContractViolation("precision must be positive definite") from exc
    return sym


def _project_ball(point: np.ndarray, precision: np.ndarray,
                  domain: BallDomain, tol: float = 1e-12) -> np.ndarray:
    # Eigendecompose once, then bisect on the Lagrange multiplier of ||u|| <= r.
    evals, Q = np.linalg.eigh(precision)
    z = Q.T @ point
    r = domain.radius

    def radius_at(lam: float) -> float:
        return float(np.linalg.norm(evals * z / (evals + lam)))

    lo, hi = 0.0, max(float(evals.max()), 1.0)
    while radius_at(hi) > r:
        hi *= 2.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if radius_at(mid) > r:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    lam = (lo + hi) / 2.0
    u = Q @ (evals * z / (evals + lam))
    n = float(np.linalg.norm(u))
    return u * (r / n) if n > 0 else u


def _project_box(point: np.ndarray, precision: np.ndarray,
                 domain: BoxDomain, tol: float = 1e-10) -> np.ndarray:
    lo = np.asarray(domain.lo)
    hi = np.asarray(domain.hi)
    if np.allclose(precision, np.diag(np.diag(precision)), atol=0.0):
        # Separable objective: coordinate-wise clipping is exact.
        return np.clip(point, lo, hi)

    def q(u: np.ndarray) -> float:
        d = u - point
        return float(d @ precision @ d)

    u = np.clip(point, lo, hi)
    eps = 1e-12 * max(1.0, float(np.max(hi - lo)))
    for _ in range(200):
        grad = 2.0 * precision @ (u - point)
        binding = ((u <= lo + eps) & (grad > 0)) | ((u >= hi - eps) & (grad < 0))
        free = ~binding
        if not free.any():
            break
        g_free = grad[free]
        if float(np.linalg.norm(g_free)) <= tol:
            break
        step = np.zeros_like(u)
        step[free] = np.linalg.solve(precision[np.ix_(free, free)], -g_free / 2.0)
        base = q(u)
        alpha = 1.0
        for _ in range(60):
            cand = np.clip(u + alpha * step, lo, hi)
            if q(cand) <= base - 1e-16 * abs(base) or np.allclose(cand, u):
                break
            alpha /= 2.0
        new_u = np.clip(u + alpha * step, lo, hi)
        if float(np.max(np.abs(new_u - u))) <= tol * 1e-2 and alpha == 1.0:
            u = new_u
            break
        u = new_u
    return u


def _simplex_support_enumeration(point: np.ndarray, precision: np.ndarray,
                                 k: int) -> np.ndarray:
    # Exact fallback: try every support set, keep the best feasible KKT point.
    best, best_val = None, math.inf
    target = precision @ point
    for mask_bits in range(1, 2 ** k):
        free = np.array([(mask_bits >> i) & 1 == 1 for i in range(k)])
        nf = int(free.sum())
        kkt = np.zeros((nf + 1, nf + 1))
        kkt[:nf, :nf] = 2.0 * precision[np.ix_(free, free)]
        kkt[:nf, nf] = 1.0
        kkt[nf, :nf] = 1.0
        rhs = np.concatenate([2.0 * target[free], [1.0]])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        u = np.zeros(k)
        u[free] = sol[:nf]
        if np.any(u < -1e-12):
            continue
        d = u - point
        val = float(d @ precision @ d)
        if val < best_val:
            best, best_val = np.clip(u, 0.0, None), val
    assert best is not None
    return best / best.sum()


def _project_simplex(point: np.ndarray, precision: np.ndarray,
                     domain: SimplexDomain) -> np.ndarray:
    """Primal active-set QP: min (u-p)' A (u-p) s.t. sum(u) = 1, u >= 0."""
    k = domain.k
    target = precision @ point
    u = domain.clip(point)  # feasible start (Euclidean projection)
    zero = u <= 1e-14
    for _ in range(3 * k + 10):
        free = ~zero
        nf = int(free.sum())
        kkt = np.zeros((nf + 1, nf + 1))
        kkt[:nf, :nf] = 2.0 * precision[np.ix_(free, free)]
        kkt[:nf, nf] = 1.0
        kkt[nf, :nf] = 1.0
        rhs = np.concatenate([2.0 * target[free], [1.0]])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return _simplex_support_enumeration(point, precision, k)
        u_star = np.zeros(k)
        u_star[free] = sol[:nf]
        mu = sol[nf]
        if float(u_star[free].min()) >= -1e-12:
            u = np.clip(u_star, 0.0, None)
            nu = 2.0 * (precision @ (u - point)) + mu
            violated = zero & (nu < -1e-10)
            if not violated.any():
                return u / u.sum()
            zero[int(np.argmin(np.where(violated, nu, np.inf)))] = False
            continue
        # Step toward the equality-constrained optimum until a coordinate hits 0.
        d = u_star - u
        shrinking = free & (d < -1e-15)
        alphas = -u[shrinking] / d[shrinking]
        alpha = min(1.0, float(alphas.min()))
        u = np.clip(u + alpha * d, 0.0, None)
        u /= u.sum()
        zero = u <= 1e-14
    return _simplex_support_enumeration(point, precision, k)


def project_mahalanobis(point: np.ndarray, precision: np.ndarray,
                        domain: Domain) -> np.ndarray:
    """argmin over the domain of (u - point)' precision (u - point)."""
    p = np.asarray(point, dtype=float)
    a = _check_spd(precision)
    if domain.contains(p, tol=0.0):
        return p
    if isinstance(domain, BallDomain):
        return _project_ball(p, a, domain)
    if isinstance(domain, BoxDomain):
        return _project_box(p, a, domain)
    if isinstance(domain, SimplexDomain):
        return _project_simplex(p, a, domain)
    raise ContractViolation(f"unsupported domain {domain!r}")


# --- batched projections (the MetaGrad hot path; agree with the single-point
# --- routines above, which the tests cross-check) ---------------------------

def _project_ball_batch(points: np.ndarray, precisions: np.ndarray,
                        radius: float) -> np.ndarray:
    """Project rows outside the ball via the secular equation in eigenbasis.

    Solves sum_i (lam_i z_i / (lam_i + mu))^2 = r^2 for the multiplier mu by
    safeguarded Newton from below (the function is convex and decreasing, so
    the iterates increase monotonically to the root).
    """
    evals, Q = np.linalg.eigh(precisions)
    z = np.einsum("nki,nk->ni", Q, points)
    w2 = (evals * z) ** 2
    r2 = radius * radius
    mu = np.zeros(points.shape[0])
    tol = 2.0 * radius * 1e-13 * max(1.0, radius)
    for _ in range(100):
        denom = evals + mu[:, None]
        f = (w2 / denom ** 2).sum(axis=1) - r2
        if float(f.max()) <= tol:
            break
        fp = -2.0 * (w2 / denom ** 3).sum(axis=1)
        step = np.where(f > tol, -f / fp, 0.0)
        mu = mu + step
    coords = (evals * z) / (evals + mu[:, None])
    u = np.einsum("nik,nk->ni", Q, coords)
    norms = np.linalg.norm(u, axis=1)
    scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
    return u * scale[:, None]


def _project_simplex_batch(points: np.ndarray, precisions: np.ndarray,
                           domain: SimplexDomain,
                           zero_init: np.ndarray | None = None) -> np.ndarray:
    """Masked-KKT projection of several points onto the simplex at once.

    Each sweep solves, per row, the equality-constrained system with zeroed
    coordinates replaced by identity rows; coordinates that come out negative
    are clamped, and the worst violated dual is released.  Rows that fail to
    settle within the sweep cap fall back to the exact single-point active set.
    """
    n, k = points.shape
    zero = np.zeros((n, k), dtype=bool) if zero_init is None else zero_init.copy()
    target = 2.0 * np.einsum("nij,nj->ni", precisions, points)
    base = np.zeros((n, k + 1, k + 1))
    base[:, :k, :k] = 2.0 * precisions
    base[:, :k, k] = 1.0
    base[:, k, :k] = 1.0
    rhs = np.concatenate([target, np.ones((n, 1))], axis=1)
    out = np.empty_like(points)
    done = np.zeros(n, dtype=bool)
    eye = np.eye(k + 1)
    for _ in range(3 * k + 10):
        live = ~done
        if not live.any():
            break
        mat = base.copy()
        b = rhs.copy()
        rows, cols = np.nonzero(zero)
        mat[rows, cols, :] = eye[cols]
        b[rows, cols] = 0.0
        try:
            sol = np.linalg.solve(mat[live], b[live][:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            break
        u = sol[:, :k]
        mu = sol[:, k]
        live_idx = np.nonzero(live)[0]
        for row_pos, idx in enumerate(live_idx):
            u_row = u[row_pos]
            if float(u_row.min()) < -1e-12:
                # Clamp the most negative coordinate and re-solve.
                free_vals = np.where(zero[idx], np.inf, u_row)
                zero[idx, int(np.argmin(free_vals))] = True
                continue
            nu = 2.0 * precisions[idx] @ (u_row - points[idx]) + mu[row_pos]
            violated = zero[idx] & (nu < -1e-10)
            if violated.any():
                zero[idx, int(np.argmin(np.where(violated, nu, np.inf)))] = False
                continue
            out[idx] = np.clip(u_row, 0.0, None)
            out[idx] /= out[idx].sum()
            done[idx] = True
    for idx in np.nonzero(~done)[0]:
        out[idx] = _project_simplex(points[idx], precisions[idx], domain)
    return out


def _snap_to_domain(u: np.ndarray, domain: Domain) -> np.ndarray:
    # Float-roundoff insurance after a projection; a no-op for interior points.
    if isinstance(domain, BallDomain):
        n = float(np.linalg.norm(u))
        return u * (domain.radius / n) if n > domain.radius else u
    if isinstance(domain, BoxDomain):
        return domain.clip(u)
    u = np.clip(u, 0.0, None)
    return u / u.sum()


# ---------------------------------------------------------------------------
# MetaGrad
# ---------------------------------------------------------------------------

class MetaGrad:
    """Full-matrix MetaGrad: ONS slaves on a rate grid under a tilted master.

    Each slave at rate eta minimizes the quadratic surrogate
    s_t(u) = -eta <w_t - u, g_t> + eta^2 <w_t - u, g_t>^2 by an online Newton
    step with precision accumulating 2 eta^2 g g'; the master reweights slaves
    by exp(-s_t(slave point)) and predicts the eta-tilted mixture.
    """

    def __init__(self, domain: Domain, G: float, horizon_hint: int,
                 D: float | None = None):
        if G <= 0:
            raise ContractViolation("gradient bound G must be positive")
        self.domain = domain
        self.dim = domain.dim
        self.D = float(domain.diameter if D is None else D)
        if self.D <= 0:
            raise ContractViolation("diameter bound D must be positive")
        self.G = float(G)
        self.etas = metagrad_eta_grid(horizon_hint, self.D, self.G)
        self.n_slaves = self.etas.size
        idx = np.arange(self.n_slaves)
        prior = 1.0 / ((idx + 1.0) * (idx + 2.0))
        self.prior = prior / prior.sum()
        self._log_p = np.log(self.prior)
        centroid = domain.centroid()
        self.W = np.tile(centroid, (self.n_slaves, 1))
        self.precisions = np.tile(np.eye(self.dim) / self.D ** 2,
                                  (self.n_slaves, 1, 1))
        self.t = 0
        # Surrogate-loss accounting used by the exponential-weights oracle.
        self.slave_surrogate = np.zeros(self.n_slaves)
        self.mix_surrogate = 0.0
        self._simplex_zero = (np.zeros((self.n_slaves, self.dim), dtype=bool)
                              if isinstance(domain, SimplexDomain) else None)

    def master_weights(self) -> np.ndarray:
        p = np.exp(self._log_p - self._log_p.max())
        return p / p.sum()

    def predict(self) -> np.ndarray:
        p = self.master_weights()
        tilt = p * self.etas
        w = (tilt @ self.W) / tilt.sum()
        return _snap_to_domain(w, self.domain)

    def update(self, gradient: np.ndarray,
               point: np.ndarray | None = None) -> None:
        g = np.atleast_1d(np.asarray(gradient, dtype=float))
        if g.shape != (self.dim,):
            raise ContractViolation(f"gradient must have dimension {self.dim}")
        if float(np.linalg.norm(g)) > self.G + GRAD_TOL:
            raise ContractViolation(
                f"gradient norm {np.linalg.norm(g)} exceeds bound {self.G}")
        w_t = self.predict() if point is None else point

        # Surrogate losses of the slaves at their own points.
        b = (self.W - w_t) @ g                     # (w^eta - w_t)' g, per slave
        s = self.etas * b + self.etas ** 2 * b ** 2  # -eta <w_t - u, g> + ...

        # Master: exponential weights on the surrogate losses.
        log_p = self._log_p - _lse(self._log_p)
        self.mix_surrogate += -_lse(log_p - s)
        self.slave_surrogate += s
        self._log_p = log_p - s

        # Slaves: online Newton step on the quadratic surrogate.
        if float(g @ g) > 0:
            outer = np.outer(g, g)
            self.precisions += 2.0 * (self.etas ** 2)[:, None, None] * outer
            coef = self.etas + 2.0 * self.etas ** 2 * b
            rhs = (coef[:, None] * g[None, :])[:, :, None]
            steps = np.linalg.solve(self.precisions, rhs)[:, :, 0]
            self.W = self._project_candidates(self.W - steps)
        self.t += 1

    def _project_candidates(self, cand: np.ndarray) -> np.ndarray:
        domain = self.domain
        if isinstance(domain, BallDomain):
            norms = np.linalg.norm(cand, axis=1)
            outside = norms > domain.radius
            if outside.any():
                cand[outside] = _project_ball_batch(
                    cand[outside], self.precisions[outside], domain.radius)
            return cand
        if isinstance(domain, BoxDomain):
            if self.dim == 1:
                # Scalar precision: the metric is irrelevant, clipping is exact.
                return np.clip(cand, domain.lo[0], domain.hi[0])
            for i in range(self.n_slaves):
                if not domain.contains(cand[i], tol=0.0):
                    cand[i] = project_mahalanobis(cand[i], self.precisions[i],
                                                  domain)
                cand[i] = _snap_to_domain(cand[i], domain)
            return cand
        cand = _project_simplex_batch(cand, self.precisions, domain,
                                      zero_init=self._simplex_zero)
        self._simplex_zero = cand <= 1e-14
        return cand

    def surrogate_loss(self, eta: float, w_t: np.ndarray, g: np.ndarray,
                       u: np.ndarray) -> float:
        """s_t^eta(u) for an arbitrary comparator point (test oracle helper)."""
        b = float((w_t - u) @ g)
        return -eta * b + eta * eta * b * b


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

class FixedHedge:
    """Exponential weights at a single fixed learning rate."""

    def __init__(self, n_experts: int, eta: float):
        if n_experts < 1 or eta < 0:
            raise ContractViolation("need n_experts >= 1 and eta >= 0")
        self.eta = float(eta)
        self.cum_losses = np.zeros(n_experts)
        self.t = 0

    def predict(self) -> np.ndarray:
        logw = -self.eta * self.cum_losses
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def update(self, losses, weights: np.ndarray | None = None) -> None:
        self.cum_losses += as_loss_vector(losses)
        self.t += 1


class FollowTheLeader:
    """Point mass on the expert with minimal cumulative loss (lowest index wins ties)."""

    def __init__(self, n_experts: int):
        if n_experts < 1:
            raise ContractViolation("need n_experts >= 1")
        self.cum_losses = np.zeros(n_experts)
        self.t = 0

    def predict(self) -> np.ndarray:
        w = np.zeros(self.cum_losses.size)
        w[int(np.argmin(self.cum_losses))] = 1.0
        return w

    def update(self, losses, weights: np.ndarray | None = None) -> None:
        self.cum_losses += as_loss_vector(losses)
        self.t += 1
