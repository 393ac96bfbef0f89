"""Welfare functions, worst-case distortion evaluators, proportional fairness,
Nash-welfare oracles, and core checking.

The utilitarian worst case over a utility class is computed per candidate
alternative by root-finding on the sign of

    g(t) = sum_i  max over the agent's class vertices of  [u_i(a*) - t * u_i(x)],

where the per-agent vertex sets are the extreme points of the consistent
class polytope: prefix indicators (1 on the agent's top j) for approval and
unit-range, uniform prefixes (1/j on the top j) for unit-sum, and the union
of both for balanced. Float mode bisects g to 1e-10; rational mode finds the
exact root by monotone ratio iteration over the finitely many linear pieces.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from . import mwu as mwu_mod
from .profiles import (
    Distribution,
    Number,
    PreferenceProfile,
    UtilityClass,
    UtilityProfile,
    prefix_mass_matrix,
    prefix_utility_row,
)
from .simplex import project_to_scaled_simplex

BISECTION_TOL = 1e-10
ORACLE_COMBO_CAP = 100_000


class OracleScaleError(ValueError):
    """An exact oracle was asked to enumerate beyond its combinatorial budget."""


@dataclass(frozen=True)
class DistortionReport:
    value: Number
    utility_class: UtilityClass
    witness_alternative: Optional[int]
    witness_utilities: Optional[UtilityProfile]
    witness_deviation: Optional[Distribution] = None

    @property
    def infinite(self) -> bool:
        return self.value == math.inf


@dataclass(frozen=True)
class CoreReport:
    alpha: float
    violated: bool
    witness_agents: Optional[tuple[int, ...]] = None   # stored-ballot indices
    witness_deviation: Optional[Distribution] = None


# ---------------------------------------------------------------------------
# welfare functions
# ---------------------------------------------------------------------------

def social_welfare(x: Distribution, u: UtilityProfile) -> Number:
    """SW(x, u) = sum_i u_i(x), weight-aware."""
    if x.m != u.m:
        raise ValueError("distribution/utility dimension mismatch")
    return sum(w * e for w, e in zip(u.weights, u.expected(x)))


def nash_welfare(x: Distribution, u: UtilityProfile) -> Number:
    """NW(x, u) = (prod_i u_i(x))^(1/n); 0 if any agent has zero utility.

    Returns the common value exactly when all expected utilities coincide
    (the geometric mean of equal numbers); otherwise computes in log space.
    """
    if x.m != u.m:
        raise ValueError("distribution/utility dimension mismatch")
    expected = u.expected(x)
    if any(e == 0 for e in expected):
        return 0 if all(e == 0 or isinstance(e, (int, Fraction)) for e in expected) else 0.0
    if all(e == expected[0] for e in expected):
        return expected[0]
    n = u.n
    log_sum = math.fsum(w * math.log(float(e)) for w, e in zip(u.weights, expected))
    return math.exp(log_sum / n)


# ---------------------------------------------------------------------------
# utilitarian distortion: vertex tables and root finding
# ---------------------------------------------------------------------------

def _vertex_depth_values(cls: UtilityClass) -> tuple[bool, bool]:
    """(use approval prefix indicators, use uniform prefixes) for the class."""
    if cls in (UtilityClass.APPROVAL, UtilityClass.UNIT_RANGE):
        return True, False
    if cls is UtilityClass.UNIT_SUM:
        return False, True
    if cls is UtilityClass.BALANCED:
        return True, True
    raise ValueError(f"utilitarian distortion is degenerate or unsupported for {cls}")


def _ballot_vertices_exact(order: Sequence[int], x_probs: Sequence[Number],
                           a_star: int, cls: UtilityClass) -> list[tuple[Fraction, Fraction, int, bool]]:
    """Per-ballot vertex list [(A, B, depth, uniform)] with exact arithmetic."""
    use_ind, use_uni = _vertex_depth_values(cls)
    r_star = order.index(a_star) + 1
    out = []
    mass = Fraction(0)
    for j, a in enumerate(order, start=1):
        mass += Fraction(x_probs[a])
        hit = 1 if j >= r_star else 0
        if use_ind:
            out.append((Fraction(hit), mass, j, False))
        if use_uni:
            out.append((Fraction(hit, j), mass / j, j, True))
    return out


def _max_term_exact(vertices, t: Fraction) -> tuple[Fraction, tuple]:
    """max (A - t B) over a ballot's vertices; ties prefer larger A so the
    ratio iteration lands on the value-attaining witness."""
    best = None
    best_vertex = None
    for A, B, depth, uniform in vertices:
        val = A - t * B
        if best is None or val > best or (val == best and A > best_vertex[0]):
            best = val
            best_vertex = (A, B, depth, uniform)
    return best, best_vertex


def _distortion_at_exact(x: Distribution, profile: PreferenceProfile, cls: UtilityClass,
                         a_star: int) -> tuple[Number, Optional[list[tuple[int, bool]]]]:
    """Exact sup_u SW(a*, u)/SW(x, u); returns (value, per-ballot (depth, uniform))."""
    tables = [_ballot_vertices_exact(order, x.probs, a_star, cls) for order in profile.orders]
    weights = profile.weights

    def aggregate(t: Fraction):
        total = Fraction(0)
        combo = []
        sum_a = Fraction(0)
        sum_b = Fraction(0)
        for w, verts in zip(weights, tables):
            val, (A, B, depth, uniform) = _max_term_exact(verts, t)
            total += w * val
            sum_a += w * A
            sum_b += w * B
            combo.append((depth, uniform))
        return total, sum_a, sum_b, combo

    t = Fraction(0)
    prev_combo = None
    for _ in range(10_000):  # combinatorial bound; iterations cross distinct pieces
        g, sum_a, sum_b, combo = aggregate(t)
        if g <= 0:
            return t, (prev_combo if prev_combo is not None else combo)
        if sum_b == 0:
            return math.inf, combo
        ratio = sum_a / sum_b
        if ratio == t:
            return t, combo
        t, prev_combo = ratio, combo
    raise RuntimeError("ratio iteration failed to terminate")  # pragma: no cover


def _float_tables(x_arr: np.ndarray, profile: PreferenceProfile, cls: UtilityClass):
    """Prefix masses and rank data shared by every candidate alternative."""
    orders = profile.order_matrix()
    prefix = np.cumsum(x_arr[orders], axis=1)            # (B, m): mass of top-j
    ranks = profile.rank_matrix()                        # (B, m): 1-based rank of a
    depths = np.arange(1, profile.m + 1, dtype=np.float64)
    return orders, prefix, ranks, depths


def _g_float(t: float, prefix, rank_col, depths, weights, use_ind: bool, use_uni: bool) -> float:
    hit = (depths >= rank_col).astype(np.float64)        # (B, m)
    best = None
    if use_ind:
        best = (hit - t * prefix).max(axis=1)
    if use_uni:
        uni = ((hit - t * prefix) / depths).max(axis=1)
        best = uni if best is None else np.maximum(best, uni)
    return float(weights @ best)


def _g_inf_terms(prefix, rank_col, depths, use_ind: bool, use_uni: bool) -> np.ndarray:
    """Per-ballot limit of max(A - tB) as t -> inf: max A over zero-mass
    vertices, -inf when every vertex has positive x-mass."""
    zero = prefix == 0.0
    hit = (depths >= rank_col).astype(np.float64)
    best = np.full(prefix.shape[0], -np.inf)
    if use_ind:
        vals = np.where(zero, hit, -np.inf)
        best = np.maximum(best, vals.max(axis=1))
    if use_uni:
        vals = np.where(zero, hit / depths, -np.inf)
        best = np.maximum(best, vals.max(axis=1))
    return best


def _witness_from_combo(profile: PreferenceProfile, combo, cls: UtilityClass,
                        exact: bool) -> UtilityProfile:
    rows = []
    for order, (depth, uniform) in zip(profile.orders, combo):
        rows.append(prefix_utility_row(order, depth, profile.m, uniform=uniform, exact=exact))
    return UtilityProfile(utils=tuple(rows), class_tag=cls, weights=profile.weights)


def _float_combo(t: float, prefix, rank_col, depths, weights, use_ind, use_uni):
    """Per-ballot argmax vertices at t, preferring larger A on ties; returns
    the combo plus its weighted ratio numerator/denominator."""
    hit = (depths >= rank_col).astype(np.float64)
    candidates = []
    if use_ind:
        candidates.append((hit - t * prefix, hit, prefix, False))
    if use_uni:
        candidates.append(((hit - t * prefix) / depths, hit / depths, prefix / depths, True))
    combo = []
    sum_a = sum_b = 0.0
    B = prefix.shape[0]
    for b in range(B):
        best = None
        for vals, As, Bs, uniform in candidates:
            j = int(np.argmax(vals[b]))
            # scan for A-maximal among near-ties of the row max
            row_max = vals[b, j]
            tie_idx = np.nonzero(vals[b] >= row_max - 1e-15)[0]
            j = max(tie_idx, key=lambda idx: (As[b, idx], idx))
            cand = (vals[b, j], As[b, j], Bs[b, j], int(j) + 1, uniform)
            if best is None or cand[:2] > best[:2]:
                best = cand
        _, A, Bv, depth, uniform = best
        combo.append((depth, uniform))
        sum_a += weights[b] * A
        sum_b += weights[b] * Bv
    return combo, sum_a, sum_b


def _distortion_at_float(x_arr: np.ndarray, profile: PreferenceProfile, cls: UtilityClass,
                         a_star: int, tables, skip_below: float = 0.0):
    orders, prefix, ranks, depths = tables
    use_ind, use_uni = _vertex_depth_values(cls)
    rank_col = ranks[:, a_star][:, None].astype(np.float64)
    weights = profile.weight_array()

    # limit of g as t -> inf: -inf as soon as one ballot has no zero-mass
    # vertex; a strictly positive limit certifies an unbounded ratio
    inf_terms = _g_inf_terms(prefix, rank_col, depths, use_ind, use_uni)
    if np.all(np.isfinite(inf_terms)) and float(weights @ inf_terms) > 0:
        combo, _, _ = _float_combo(1e300, prefix, rank_col, depths, weights, use_ind, use_uni)
        return math.inf, combo

    if skip_below > 0 and _g_float(skip_below, prefix, rank_col, depths, weights, use_ind, use_uni) < 0:
        return -math.inf, None  # cannot beat the current maximum

    tops = prefix[:, 0]
    if np.all(tops > 0):
        hi = 1.0 + 4.0 * profile.m * float(1.0 / tops.min())
    else:
        hi = 2.0
    lo = 0.0
    doublings = 0
    while _g_float(hi, prefix, rank_col, depths, weights, use_ind, use_uni) > 0:
        lo = hi
        hi *= 2.0
        doublings += 1
        if doublings > 60:
            combo, _, _ = _float_combo(hi, prefix, rank_col, depths, weights, use_ind, use_uni)
            return math.inf, combo
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _g_float(mid, prefix, rank_col, depths, weights, use_ind, use_uni) > 0:
            lo = mid
        else:
            hi = mid
    combo, sum_a, sum_b = _float_combo(lo, prefix, rank_col, depths, weights, use_ind, use_uni)
    if sum_b == 0:
        return math.inf, combo
    return sum_a / sum_b, combo


def distortion(x: Distribution, profile: PreferenceProfile, cls: UtilityClass) -> DistortionReport:
    """Worst-case utilitarian distortion of x over consistent class utilities.

    Rejects UtilityClass.ALL (degenerate for utilitarian welfare). The report
    carries the maximizing alternative and an attaining vertex utility
    profile; recomputing the witness ratio reproduces the value.
    """
    if cls is UtilityClass.ALL:
        raise ValueError("utilitarian distortion over the unrestricted class is degenerate")
    if x.m != profile.m:
        raise ValueError("distribution/profile dimension mismatch")

    if x.exact:
        best_val: Number = -1
        best: Optional[tuple[int, list]] = None
        for a_star in range(profile.m):
            val, combo = _distortion_at_exact(x, profile, cls, a_star)
            if val == math.inf:
                best_val, best = math.inf, (a_star, combo)
                break
            if val > best_val:
                best_val, best = val, (a_star, combo)
        a_star, combo = best
        witness = _witness_from_combo(profile, combo, cls, exact=True)
        if best_val != math.inf:
            s = social_welfare(x, witness)
            best_val = math.inf if s == 0 else _witness_ratio(witness, a_star, s)
        return DistortionReport(best_val, cls, a_star, witness)

    x_arr = x.as_array()
    tables = _float_tables(x_arr, profile, cls)
    best_val = -math.inf
    best = None
    for a_star in range(profile.m):
        skip = best_val if best is not None and best_val > 0 else 0.0
        val, combo = _distortion_at_float(x_arr, profile, cls, a_star, tables, skip_below=skip)
        if combo is None:
            continue
        if val > best_val:
            best_val, best = val, (a_star, combo)
            if val == math.inf:
                break
    a_star, combo = best
    witness = _witness_from_combo(profile, combo, cls, exact=False)
    return DistortionReport(best_val, cls, a_star, witness)


def _witness_ratio(witness: UtilityProfile, a_star: int, sw_x: Number) -> Number:
    sw_star = sum(w * row[a_star] for w, row in zip(witness.weights, witness.utils))
    return sw_star / sw_x


def distortion_bruteforce(x: Distribution, profile: PreferenceProfile,
                          cls: UtilityClass) -> Number:
    """Independent oracle: enumerate every per-ballot vertex profile and every
    point-mass deviation; exact when x is exact. Scale-capped."""
    use_ind, use_uni = _vertex_depth_values(cls)
    per_ballot = []
    for order in profile.orders:
        options = []
        for depth in range(1, profile.m + 1):
            if use_ind:
                options.append((depth, False))
            if use_uni:
                options.append((depth, True))
        per_ballot.append(options)
    count = 1
    for options in per_ballot:
        count *= len(options)
        if count > ORACLE_COMBO_CAP:
            raise OracleScaleError(f"{count}+ vertex profiles exceed the oracle budget")
    exact = x.exact
    best: Number = 0
    for combo in itertools.product(*per_ballot):
        witness = _witness_from_combo(profile, combo, cls, exact=exact)
        sw_x = social_welfare(x, witness)
        for a_star in range(profile.m):
            sw_star = sum(w * row[a_star] for w, row in zip(witness.weights, witness.utils))
            if sw_x == 0:
                if sw_star > 0:
                    return math.inf
                continue
            ratio = sw_star / sw_x
            if ratio > best:
                best = ratio
    return best


# ---------------------------------------------------------------------------
# proportional fairness
# ---------------------------------------------------------------------------

def pf_value(x: Distribution, u: UtilityProfile) -> Number:
    """PF(x, u) = max_a (1/n) sum_i u_i(a)/u_i(x); +inf when some u_i(x) = 0."""
    if x.m != u.m:
        raise ValueError("dimension mismatch")
    expected = u.expected(x)
    if any(e == 0 for e in expected):
        return math.inf
    n = u.n
    best: Number = 0
    for a in range(u.m):
        total = sum(w * row[a] / e for w, row, e in zip(u.weights, u.utils, expected))
        val = total / n
        if val > best:
            best = val
    return best


def pf_payoffs(x: Distribution, profile: PreferenceProfile) -> list:
    """payoff(x, a) = (1/n) sum_i 1 / x(h_i(a)) for every alternative a."""
    if x.m != profile.m:
        raise ValueError("dimension mismatch")
    n = profile.n
    if x.exact:
        payoffs: list[Number] = [Fraction(0)] * profile.m
        for order, w in zip(profile.orders, profile.weights):
            mass = Fraction(0)
            for a in order:
                mass += Fraction(x.probs[a])
                if mass == 0 or payoffs[a] == math.inf:
                    payoffs[a] = math.inf
                else:
                    payoffs[a] += Fraction(w) / mass
        return [p if p == math.inf else p / n for p in payoffs]
    H = prefix_mass_matrix(x.as_array(), profile)
    w = profile.weight_array()
    with np.errstate(divide="ignore"):
        inv = np.where(H > 0.0, 1.0 / np.where(H > 0.0, H, 1.0), np.inf)
    vals = (w @ inv) / n
    return [float(v) for v in vals]


def pf_distortion(x: Distribution, profile: PreferenceProfile) -> DistortionReport:
    """Closed-form worst case over all consistent utilities:
    D^PF(x) = max_a (1/n) sum_i 1/x(h_i(a)), witnessed by the prefix-approval
    profile that saturates each agent's bound at the argmax alternative."""
    payoffs = pf_payoffs(x, profile)
    a_star = payoffs.index(max(payoffs))  # lowest index on ties
    exact = x.exact
    rows = tuple(prefix_utility_row(order, order.index(a_star) + 1, profile.m, exact=exact)
                 for order in profile.orders)
    witness = UtilityProfile(utils=rows, class_tag=UtilityClass.APPROVAL,
                             weights=profile.weights)
    return DistortionReport(payoffs[a_star], UtilityClass.ALL, a_star, witness)


def pf_distortion_bruteforce(x: Distribution, profile: PreferenceProfile) -> Number:
    """Oracle: max of pf_value over every per-ballot prefix-approval profile."""
    count = profile.m ** profile.num_ballots
    if count > ORACLE_COMBO_CAP:
        raise OracleScaleError(f"{count} approval profiles exceed the oracle budget")
    exact = x.exact
    best: Number = 0
    for depths in itertools.product(range(1, profile.m + 1), repeat=profile.num_ballots):
        rows = tuple(prefix_utility_row(order, d, profile.m, exact=exact)
                     for order, d in zip(profile.orders, depths))
        u = UtilityProfile(utils=rows, class_tag=UtilityClass.APPROVAL, weights=profile.weights)
        val = pf_value(x, u)
        if val == math.inf:
            return math.inf
        if val > best:
            best = val
    return best


# ---------------------------------------------------------------------------
# Nash-welfare optimum and Nash distortion oracle
# ---------------------------------------------------------------------------

def nash_opt(u: UtilityProfile, tol: float = 1e-6, max_iters: int = 50_000,
             strict: bool = True) -> Distribution:
    """Maximize sum_i w_i log u_i(y) over the simplex by projected gradient
    ascent with backtracking; stops once PF(result, u) <= 1 + tol, which is a
    verifiable optimality certificate."""
    U = u.as_array()
    w = u.weight_array()
    if np.any(U.max(axis=1) <= 0):
        raise ValueError("every agent needs positive utility for some alternative")
    n = float(u.n)
    m = u.m
    y = np.full(m, 1.0 / m)

    def objective(vec):
        vals = U @ vec
        if np.any(vals <= 0):
            return -math.inf
        return float(w @ np.log(vals))

    current = objective(y)
    step = 1.0
    for _ in range(max_iters):
        vals = U @ y
        grad = U.T @ (w / vals)
        if grad.max() <= n * (1.0 + tol):
            return Distribution(tuple(float(v) for v in y))
        improved = False
        trial_step = step * 2.0
        for _ in range(80):
            cand = project_to_scaled_simplex(y + trial_step * grad, 1.0)
            cand_val = objective(cand)
            if cand_val > current + 1e-18:
                y, current, step, improved = cand, cand_val, trial_step, True
                break
            trial_step *= 0.5
        if not improved:
            break
    message = "nash_opt stopped before reaching its PF certificate"
    if strict:
        grad = U.T @ (w / (U @ y))
        if grad.max() > n * (1.0 + 10 * tol):
            raise RuntimeError(message)
    else:
        warnings.warn(message, RuntimeWarning)
    return Distribution(tuple(float(v) for v in y))


def nash_distortion_smallscale(x: Distribution, profile: PreferenceProfile) -> DistortionReport:
    """Exact Nash-welfare distortion by enumerating prefix-approval choices per
    stored ballot (the worst case is an approval profile, and identical agents
    share a worst-case prefix, so block-pure profiles suffice).

    Refuses instances with more than 1e5 combinations; callers should fall
    back to pf_distortion as an upper bound.
    """
    B = profile.num_ballots
    count = profile.m ** B
    if count > ORACLE_COMBO_CAP:
        raise OracleScaleError(
            f"m^blocks = {count} exceeds the Nash oracle budget; use pf_distortion as an upper bound")
    x_arr = x.as_array()
    orders = profile.order_matrix()
    prefix = np.cumsum(x_arr[orders], axis=1)  # prefix[b, j-1] = x(top-j of ballot b)
    w = profile.weight_array()
    n = float(profile.n)

    best_val = -math.inf
    best_combo = None
    best_dev = None
    for depths in itertools.product(range(1, profile.m + 1), repeat=B):
        rows = tuple(prefix_utility_row(order, d, profile.m)
                     for order, d in zip(profile.orders, depths))
        u = UtilityProfile(utils=rows, class_tag=UtilityClass.APPROVAL, weights=profile.weights)
        opt = nash_opt(u)
        nw_opt = nash_welfare(opt, u)
        e_x = np.array([prefix[b, depths[b] - 1] for b in range(B)])
        if np.any(e_x == 0.0):
            if nw_opt > 0:
                return DistortionReport(math.inf, UtilityClass.APPROVAL, None, u, opt)
            continue
        nw_x = math.exp(float(w @ np.log(e_x)) / n)
        ratio = float(nw_opt) / nw_x
        if ratio > best_val:
            best_val, best_combo, best_dev = ratio, u, opt
    return DistortionReport(best_val, UtilityClass.APPROVAL, None, best_combo, best_dev)


# ---------------------------------------------------------------------------
# core checking
# ---------------------------------------------------------------------------

def _coalition_game_value(M: np.ndarray, epsilon: float) -> float:
    """Certified-from-below estimate of max_y min_i (M y) via mwu_solve on the
    negated game; returns lo with true value in [lo, lo + epsilon]."""
    rows, m = M.shape
    shift = float(np.abs(M).max())
    if shift == 0.0:
        return 0.0
    P = shift - M  # in [0, 2*shift]; adversary maximizes P <=> minimizes M
    game = mwu_mod.MatrixGame(num_rows=rows, payoff_bound=2.0 * shift)

    y_sum = np.zeros(m)
    rounds = 0

    def best_response(mix: np.ndarray):
        nonlocal rounds, y_sum
        col = int(np.argmin(mix @ P))
        y_sum[col] += 1.0
        rounds += 1
        return col, P[:, col]

    mwu_mod.mwu_solve(game, best_response, epsilon)
    y_avg = y_sum / rounds
    return float((M @ y_avg).min())


def core_check(x: Distribution, u: UtilityProfile, alpha: float,
               tol: float = 1e-9) -> CoreReport:
    """Search all coalitions of stored ballots for an alpha-core violation.

    A coalition S violates when some deviation y satisfies
    (|S|/n) u_i(y) >= alpha * u_i(x) for all i in S with one strict. Each
    coalition's max-min game is screened with mwu_solve; the strict witness is
    then resolved by maximizing total slack (exact LP), and any returned
    witness is re-verified against the definition.
    """
    if u.n > 20:
        raise ValueError("core_check enumerates coalitions; capped at n <= 20")
    U = u.as_array()
    n = float(u.n)
    c = np.array([float(e) for e in u.expected(x)])
    B = u.num_ballots
    block_w = np.asarray(u.weights, dtype=np.float64)

    for mask in range(1, 1 << B):
        members = [b for b in range(B) if mask >> b & 1]
        W = float(block_w[members].sum())
        M = (W / n) * U[members] - alpha * c[members][:, None]
        if np.any(M.max(axis=1) < -tol):
            continue  # some member cannot be compensated by any deviation
        scale = float(np.abs(M).max())
        if scale > 0 and len(members) > 1:
            lo = _coalition_game_value(M, epsilon=0.25 * scale)
            if lo + 0.25 * scale < -tol:
                continue
        # slack maximization: max sum_i M_i . y  s.t.  M y >= 0, y in simplex
        res = linprog(c=-(M.sum(axis=0)), A_ub=-M, b_ub=np.zeros(len(members)),
                      A_eq=np.ones((1, U.shape[1])), b_eq=[1.0], bounds=(0.0, 1.0),
                      method="highs")
        if not res.success:
            continue
        y = np.maximum(res.x, 0.0)
        y = y / y.sum()
        slacks = M @ y
        if slacks.min() >= -tol and slacks.max() > tol:
            return CoreReport(alpha=alpha, violated=True,
                              witness_agents=tuple(members),
                              witness_deviation=Distribution(tuple(float(v) for v in y)))
    return CoreReport(alpha=alpha, violated=False)
