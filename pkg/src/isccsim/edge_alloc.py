"""Edge computation-resource allocation.

The per-round edge problem is a uniformly weighted quadratic pull of the
allocations toward the device targets c_k = f_hat_k - beta_k/rho under a
total budget and nonnegativity, i.e. a Euclidean projection of c onto
{f >= 0, sum f <= f_total}. The production path solves it by bisection on
the budget multiplier mu with the closed form

    f_k = max(c_k - (K/rho) mu, 0)

and an independent sort-based projection computes the exact optimum for
verification, plus an explicit KKT residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AllocationRequest:
    targets: np.ndarray       # c_k = f_hat_k - beta_k / rho, cycles/s
    rho: float
    f_total: float
    epsilon: float            # bisection stop on |sum f - f_total|

    def __post_init__(self):
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=float))
        if self.rho <= 0 or self.f_total <= 0 or self.epsilon <= 0:
            raise ValueError("rho, f_total, and epsilon must be > 0")


@dataclass(frozen=True)
class AllocationResult:
    f: np.ndarray
    mu_star: float
    kkt_residual: float
    iterations: int


def kkt_residual(req: AllocationRequest, f: np.ndarray, mu: float) -> float:
    """Largest violation of stationarity, feasibility, and complementary slackness."""
    k = req.targets.size
    grad = (req.rho / k) * (f - req.targets) + mu
    res = 0.0
    res = max(res, float(np.max(np.abs(grad[f > 0]), initial=0.0)))
    res = max(res, float(np.max(-grad[f <= 0], initial=0.0)))     # need grad >= 0 at 0
    res = max(res, float(np.max(-f, initial=0.0)))                # f >= 0
    res = max(res, float(f.sum() - req.f_total))                  # budget
    res = max(res, -mu)                                           # mu >= 0
    res = max(res, abs(mu * (f.sum() - req.f_total)))             # slackness
    return res


def allocate(req: AllocationRequest, max_iter: int = 200) -> AllocationResult:
    """Closed-form allocation with bisection on the budget multiplier.

    If the clipped targets already fit (within epsilon), each device gets its
    target and mu = 0. Otherwise mu is bisected on [0, (rho/K) max_k c_k]
    until |sum f - f_total| < epsilon; the sum is continuous and nonincreasing
    in mu, so bisection converges.
    """
    c = req.targets
    k = c.size
    f0 = np.maximum(c, 0.0)
    if f0.sum() <= req.f_total + req.epsilon:
        f = f0
        return AllocationResult(f, 0.0, kkt_residual(req, f, 0.0), 0)

    mu_lo = 0.0
    mu_hi = (req.rho / k) * float(np.max(np.maximum(c, 0.0)))
    mu = mu_hi
    iters = 0
    for iters in range(1, max_iter + 1):
        mu = 0.5 * (mu_lo + mu_hi)
        f = np.maximum(c - (k / req.rho) * mu, 0.0)
        gap = f.sum() - req.f_total
        if abs(gap) < req.epsilon:
            break
        if gap > 0:
            mu_lo = mu
        else:
            mu_hi = mu
    f = np.maximum(c - (k / req.rho) * mu, 0.0)
    return AllocationResult(f, float(mu), kkt_residual(req, f, mu), iters)


def projection_oracle(req: AllocationRequest) -> np.ndarray:
    """Exact minimizer of sum (f_k - c_k)^2 over {f >= 0, sum f <= f_total}.

    Sort-based threshold search in O(K log K): if the clipped targets fit,
    they are the answer; otherwise the optimum is max(c - theta, 0) with
    theta > 0 chosen so the active coordinates sum exactly to the budget.
    """
    c = req.targets
    f0 = np.maximum(c, 0.0)
    if f0.sum() <= req.f_total:
        return f0
    s = np.sort(c)[::-1]
    prefix = np.cumsum(s)
    n = np.arange(1, c.size + 1)
    theta_candidates = (prefix - req.f_total) / n
    # largest prefix where every active entry stays above the threshold
    valid = s - theta_candidates > 0
    j = int(np.nonzero(valid)[0].max())
    theta = theta_candidates[j]
    return np.maximum(c - theta, 0.0)
