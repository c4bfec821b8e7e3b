"""Non-rainbow reference solvers and reference constants.

Kruskal MST (the unconstrained Z* baseline for trees), exact tiny-n TSP by
bitmask dynamic programming, a nearest-neighbor + 2-opt tour heuristic for
the large-n Z*_TSP proxy, the zeta(3) series value, and the implicit-equation
tour constant tau.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .instance import all_edge_endpoints


class NumericError(ArithmeticError):
    pass


@dataclass
class SpanningTree:
    edges: list[int]  # edge ids
    total_cost: float


@dataclass
class Tour:
    order: list[int]  # permutation of range(n)
    total_cost: float


@njit(cache=True)
def _kruskal_accept(us, vs, order, n):
    parent = np.arange(n)
    chosen = np.empty(n - 1, dtype=np.int64)
    k = 0
    for idx in range(order.shape[0]):
        e = order[idx]
        ru = us[e]
        while parent[ru] != ru:
            parent[ru] = parent[parent[ru]]
            ru = parent[ru]
        rv = vs[e]
        while parent[rv] != rv:
            parent[rv] = parent[parent[rv]]
            rv = parent[rv]
        if ru != rv:
            parent[ru] = rv
            chosen[k] = e
            k += 1
            if k == n - 1:
                break
    return chosen[:k]


def kruskal_mst(instance) -> SpanningTree:
    """Globally minimum spanning tree; cost ties broken by edge id."""
    n = instance.n
    if n == 0:
        raise ValueError("empty instance has no spanning tree")
    if n == 1:
        return SpanningTree(edges=[], total_cost=0.0)
    costs = instance.cost_array()
    us, vs = all_edge_endpoints(n)
    order = np.argsort(costs, kind="stable")  # stable => ties by edge id
    chosen = _kruskal_accept(us, vs, order, n)
    if len(chosen) != n - 1:
        raise RuntimeError("complete graph should always span")
    return SpanningTree(edges=[int(e) for e in chosen], total_cost=float(costs[chosen].sum()))


@njit(cache=True)
def _held_karp(d):
    n = d.shape[0]
    full = 1 << n
    INF = 1e18
    dp = np.full((full, n), INF)
    par = np.full((full, n), -1, dtype=np.int8)
    dp[1, 0] = 0.0
    for mask in range(1, full):
        if mask & 1 == 0:
            continue
        for last in range(n):
            if dp[mask, last] >= INF or not (mask >> last) & 1:
                continue
            base = dp[mask, last]
            for nxt in range(1, n):
                if (mask >> nxt) & 1:
                    continue
                nm = mask | (1 << nxt)
                cand = base + d[last, nxt]
                if cand < dp[nm, nxt]:
                    dp[nm, nxt] = cand
                    par[nm, nxt] = last
    best = INF
    best_last = -1
    for last in range(1, n):
        cand = dp[full - 1, last] + d[last, 0]
        if cand < best:
            best = cand
            best_last = last
    return dp, par, best, best_last


def tsp_exact(instance) -> Tour:
    """Minimum-cost Hamilton cycle by subset DP. Requires 2 <= n <= 13.

    For n = 2 the cycle traverses the single edge twice.
    """
    n = instance.n
    if not (2 <= n <= 13):
        raise ValueError(f"tsp_exact handles 2 <= n <= 13, got n={n}")
    d = instance.cost_matrix()
    if n == 2:
        return Tour(order=[0, 1], total_cost=2.0 * float(d[0, 1]))
    dp, par, best, best_last = _held_karp(d)
    order = []
    mask = (1 << n) - 1
    last = int(best_last)
    while last != -1:
        order.append(last)
        nlast = int(par[mask, last])
        mask ^= 1 << last
        last = nlast
    order.reverse()
    return Tour(order=order, total_cost=float(best))


@njit(cache=True)
def _nearest_neighbor(d):
    n = d.shape[0]
    tour = np.empty(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.bool_)
    tour[0] = 0
    used[0] = True
    for k in range(1, n):
        prev = tour[k - 1]
        best = -1
        bestd = 1e18
        for j in range(n):
            if not used[j] and d[prev, j] < bestd:
                bestd = d[prev, j]
                best = j
        tour[k] = best
        used[best] = True
    return tour


@njit(cache=True)
def _two_opt_sweep(d, tour):
    """One full improvement sweep; returns number of applied exchanges."""
    n = tour.shape[0]
    applied = 0
    for i in range(n - 1):
        a = tour[i - 1] if i > 0 else tour[n - 1]
        b = tour[i]
        for j in range(i + 1, n):
            c = tour[j]
            e = tour[(j + 1) % n]
            if a == c or b == e:
                continue
            delta = d[a, c] + d[b, e] - d[a, b] - d[c, e]
            if delta < -1e-12:
                lo, hi = i, j
                while lo < hi:
                    tour[lo], tour[hi] = tour[hi], tour[lo]
                    lo += 1
                    hi -= 1
                applied += 1
                b = tour[i]
                a = tour[i - 1] if i > 0 else tour[n - 1]
    return applied


def tour_cost(d: np.ndarray, order) -> float:
    order = np.asarray(order)
    return float(d[order, np.roll(order, -1)].sum())


def has_improving_two_exchange(d: np.ndarray, order) -> bool:
    """Full scan used by tests to certify 2-opt local optimality."""
    order = list(order)
    n = len(order)
    for i in range(n - 1):
        a = order[i - 1]
        b = order[i]
        for j in range(i + 1, n):
            c = order[j]
            e = order[(j + 1) % n]
            if a == c or b == e:
                continue
            if d[a, c] + d[b, e] < d[a, b] + d[c, e] - 1e-12:
                return True
    return False


def tsp_heuristic(instance, time_budget: float | None = None,
                  max_sweeps: int | None = None) -> Tour:
    """Nearest-neighbor start plus 2-opt sweeps until local optimum.

    Deterministic when both caps are None. The cost is an upper bound on the
    optimal tour, which is the direction the gap experiments need.
    """
    n = instance.n
    if n < 3:
        raise ValueError("tours need n >= 3")
    d = instance.cost_matrix()
    tour = _nearest_neighbor(d)
    t0 = time.monotonic()
    sweeps = 0
    while True:
        if max_sweeps is not None and sweeps >= max_sweeps:
            break
        applied = _two_opt_sweep(d, tour)
        sweeps += 1
        if applied == 0:
            break
        if time_budget is not None and time.monotonic() - t0 > time_budget:
            break
    return Tour(order=[int(v) for v in tour], total_cost=tour_cost(d, tour))


def zeta3(terms: int = 200_000) -> float:
    """zeta(3) from its series; tail below 1/(2*terms^2)."""
    k = np.arange(1, terms + 1, dtype=np.float64)
    return float(np.sum(1.0 / k**3))


def _implicit_lhs(t: float) -> float:
    # g(t) = (1 + t/2) e^{-t}, strictly decreasing from 1 to 0 on [0, inf)
    return (1.0 + 0.5 * t) * math.exp(-t)


def solve_y(x: float) -> float:
    """Positive solution y of (1+x/2)e^{-x} + (1+y/2)e^{-y} = 1.

    Diverges like -log x as x -> 0+ and decays to 0 as x -> infinity.
    """
    if x < 0:
        raise NumericError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return math.inf
    # 1 - (1+x/2)e^{-x} computed without cancellation for tiny x
    target = -math.expm1(-x) - 0.5 * x * math.exp(-x)
    if target <= 0.0:
        return math.inf
    hi = 1.0
    while _implicit_lhs(hi) > target:
        hi *= 2.0
        if hi > 1e4:
            raise NumericError(f"root bracket failed at x={x}")
    try:
        return float(brentq(lambda t: _implicit_lhs(t) - target, 0.0, hi, xtol=1e-14, rtol=8.9e-16))
    except RuntimeError as e:
        raise NumericError(f"root solve failed at x={x}: {e}") from None


@dataclass
class WastlundResult:
    tau: float
    est_error: float  # |tau(panels) - tau(panels/2)|, self-reported
    panels: int


# Integration layout: tau = 1/2 * int_0^inf y(x) dx. Split at x = 0.1.
# On (0, 0.1] substitute x = e^{-u} (u in [ln 10, U_MAX]); the integrand
# y(e^{-u}) e^{-u} is smooth and decays like u e^{-u}, taming the log
# singularity at x = 0. On [0.1, X_MAX] integrate directly. Beyond X_MAX,
# y(x) ~ 2(1+x/2)e^{-x}, so the tail of tau is below e^{-X_MAX}(X_MAX+3)/2
# which is ~1e-11 for X_MAX = 28.
_X_SPLIT = 0.1
_X_MAX = 28.0
_U_MAX = 55.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _gl_panel_integral(f, a: float, b: float, panels: int) -> float:
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for k in range(panels):
        lo, hi = edges[k], edges[k + 1]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for node, w in zip(_GL_NODES, _GL_WEIGHTS):
            total += w * f(mid + half * node) * half
    return total


def _tau_at(panels: int) -> float:
    direct = _gl_panel_integral(solve_y, _X_SPLIT, _X_MAX, panels)
    left = _gl_panel_integral(lambda u: solve_y(math.exp(-u)) * math.exp(-u),
                              math.log(1.0 / _X_SPLIT), _U_MAX, panels)
    return 0.5 * (direct + left)


def wastlund_constant(panels: int = 64) -> WastlundResult:
    """Numeric tau via per-x root solves and composite Gauss-Legendre panels.

    Doubling `panels` halves the quadrature step; the returned est_error
    compares against the half-resolution value. Absolute accuracy is far
    below 1e-6 at the default resolution.
    """
    if panels < 2:
        raise ValueError("need at least 2 panels")
    coarse = _tau_at(panels // 2)
    fine = _tau_at(panels)
    return WastlundResult(tau=fine, est_error=abs(fine - coarse), panels=panels)
