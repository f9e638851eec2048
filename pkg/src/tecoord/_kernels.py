"""Hot numeric kernels.

Every function here is written as numpy-vectorized code that is valid
both under numba's nopython compiler and as plain numpy, so the backend
flag (``TECOORD_BACKEND``, see :mod:`tecoord._backend`) picks between a
jit-compiled and a pure-numpy execution of the *same* source.

All array arguments are float64 and are never mutated.
"""

import numpy as np

from ._backend import jit


@jit
def demand_profile(lam, alpha, beta, a_lo, a_hi):
    # argmax_a  alpha*a - beta*a^2/2 - lam*a  on [a_lo, a_hi], per agent
    return np.minimum(np.maximum((alpha - lam) / beta, a_lo), a_hi)


@jit
def supply_amount(lam, c1, c2, y_lo, y_hi):
    # argmax_y  lam*y - c1*y - c2*y^2/2  on [y_lo, y_hi]
    if c2 > 0.0:
        return min(max((lam - c1) / c2, y_lo), y_hi)
    if lam > c1:
        return y_hi
    return y_lo  # price ties in the linear-cost case resolve to the lower bound


@jit
def excess_demand(lam, alpha, beta, a_lo, a_hi, c1, c2, y_lo, y_hi):
    total = np.sum(demand_profile(lam, alpha, beta, a_lo, a_hi))
    return total - supply_amount(lam, c1, c2, y_lo, y_hi)


@jit
def bisect_clearing_price(alpha, beta, a_lo, a_hi, c1, c2, y_lo, y_hi,
                          lo, hi, width_tol, max_iter):
    # Excess demand is nonincreasing in lam; the caller supplies a bracket
    # with g(lo) >= 0 >= g(hi).
    it = 0
    while hi - lo > width_tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if excess_demand(mid, alpha, beta, a_lo, a_hi, c1, c2, y_lo, y_hi) > 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


@jit
def primal_dual_path(alpha, beta, a_lo, a_hi, c1, c2, y_lo, y_hi,
                     lam0, gamma0, diminishing, bal_tol, price_tol, max_iter):
    # lam(k) = lam(k-1) + step(k) * (sum demand(lam(k-1)) - supply(lam(k-1)))
    # Row k-1 of hist holds (lam(k), total demand(k), y(k), imbalance(k)).
    hist = np.empty((max_iter, 4))
    lam = lam0
    n = 0
    converged = False
    while n < max_iter:
        d = np.sum(demand_profile(lam, alpha, beta, a_lo, a_hi))
        y = supply_amount(lam, c1, c2, y_lo, y_hi)
        g = d - y
        if diminishing:
            step = gamma0 / (n + 1.0)
        else:
            step = gamma0
        new_lam = lam + step * g
        hist[n, 0] = new_lam
        hist[n, 1] = d
        hist[n, 2] = y
        hist[n, 3] = g
        n += 1
        if abs(g) <= bal_tol:
            converged = True
            lam = new_lam
            break
        if abs(new_lam - lam) <= price_tol:
            lam = new_lam
            break  # price stalled short of balance; caller reports not converged
        lam = new_lam
    return hist[:n], lam, converged


@jit
def waterfill_bisect(alpha, beta, a_lo, a_hi, cap):
    # Maximize sum_i (alpha_i*a_i - beta_i*a_i^2/2) s.t. sum a_i <= cap, boxes.
    # KKT: a_i = clamp((alpha_i - mu)/beta_i), shared multiplier mu >= 0.
    free = np.minimum(np.maximum(alpha / beta, a_lo), a_hi)
    if np.sum(free) <= cap:
        return free, 0.0
    lo = 0.0
    hi = np.max(alpha)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sum(demand_profile(mid, alpha, beta, a_lo, a_hi)) > cap:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    return demand_profile(mu, alpha, beta, a_lo, a_hi), mu


@jit
def declared_log_alloc(sigma, a_lo, a_hi, cap):
    # Allocation rule for declared utilities sigma_i*log(1+a_i):
    # a_i = clamp(sigma_i/mu - 1), mu chosen so the capacity binds.
    if np.sum(a_hi) <= cap:
        return a_hi.copy(), 0.0
    lo = np.min(sigma / (1.0 + a_hi))
    hi = np.max(sigma / (1.0 + a_lo))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        a = np.minimum(np.maximum(sigma / mid - 1.0, a_lo), a_hi)
        if np.sum(a) > cap:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    return np.minimum(np.maximum(sigma / mu - 1.0, a_lo), a_hi), mu


@jit
def supply_bid_fixed_point(beta, b0, b_cap, damping, move_tol, max_iter):
    # Damped synchronous best response for linear supply-function bidding.
    # Against opponents' bid sum s, the interior best reply is s/(1+beta*s).
    b = b0.copy()
    n = b.shape[0]
    it = 0
    moved = np.inf
    while it < max_iter:
        total = np.sum(b)
        new_b = np.empty(n)
        for i in range(n):
            s = total - b[i]
            if s > 0.0:
                br = s / (1.0 + beta[i] * s)
            else:
                br = b[i]
            if br > b_cap:
                br = b_cap
            new_b[i] = (1.0 - damping) * b[i] + damping * br
        moved = np.max(np.abs(new_b - b))
        b = new_b
        it += 1
        if moved <= move_tol:
            break
    return b, it, moved
