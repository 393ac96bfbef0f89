"""Generators for the worst-case instance families, each bundled with the
witness constructions that make the bound claims executable.

"Arbitrary" fill positions are always the unused alternatives in increasing
order, rotated cyclically by agent index: deterministic, and the bound
arguments are fill-agnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .profiles import (
    Distribution,
    PreferenceProfile,
    UtilityClass,
    UtilityProfile,
    check_consistency,
    prefix_utility_row,
)
from .rules import harmonic_number


@dataclass(frozen=True)
class FixtureWitness:
    name: str
    utilities: UtilityProfile
    deviation: Distribution


@dataclass(frozen=True)
class FixtureBundle:
    profile: PreferenceProfile
    witnesses: tuple[FixtureWitness, ...]
    claimed_bound: float
    params: dict

    def __post_init__(self):
        for w in self.witnesses:
            ok, violation = check_consistency(w.utilities, self.profile)
            if not ok:
                raise AssertionError(f"witness {w.name} inconsistent: {violation}")


def _cyclic_fill(used: list[int], m: int, rotation: int) -> list[int]:
    rest = [a for a in range(m) if a not in used]
    if not rest:
        return []
    shift = rotation % len(rest)
    return rest[shift:] + rest[:shift]


def gen_sqrt_lb(n: int) -> FixtureBundle:
    """Approval worst case: n agents (n a perfect square), m = n + sqrt(n).

    Agent i ranks its personal alternative a_i first and the group alternative
    a_{n + i // sqrt(n)} second. Whatever distribution x a rule picks, some
    group alternative gets mass at most 1/sqrt(n); approving it by its whole
    group forces a welfare ratio of at least sqrt(n)/2.
    """
    s = math.isqrt(n)
    if s * s != n:
        raise ValueError(f"n must be a perfect square, got {n}")
    m = n + s
    orders = []
    for i in range(n):
        first, second = i, n + i // s
        orders.append(tuple([first, second] + _cyclic_fill([first, second], m, i)))
    profile = PreferenceProfile(m=m, orders=tuple(orders), weights=(1,) * n)

    witnesses = []
    for r in range(s):
        rows = []
        for i in range(n):
            depth = 2 if i // s == r else 1
            rows.append(prefix_utility_row(profile.orders[i], depth, m, exact=True))
        u = UtilityProfile(utils=tuple(rows), class_tag=UtilityClass.APPROVAL,
                           weights=profile.weights)
        witnesses.append(FixtureWitness(
            name=f"group-{r}", utilities=u,
            deviation=Distribution.point_mass(m, n + r, exact=True)))
    return FixtureBundle(profile=profile, witnesses=tuple(witnesses),
                         claimed_bound=s / 2.0,
                         params={"n": n, "m": m, "groups": s})


def select_sqrt_witness(bundle: FixtureBundle, x: Distribution) -> FixtureWitness:
    """The witness for the group alternative x weights least (lowest index on
    ties); by pigeonhole its mass is at most 1/sqrt(n)."""
    n, s = bundle.params["n"], bundle.params["groups"]
    r = min(range(s), key=lambda r: (x.probs[n + r], r))
    return bundle.witnesses[r]


def gen_nash_lb(k: int) -> FixtureBundle:
    """Nash-welfare worst case: n = 2^(k-1) agents, m = 2^k - 1 alternatives.

    Rank level l hosts alternatives 2^(k-l) .. 2^(k-l+1)-1 (1-indexed), each
    ranked l-th by 2^(l-1) agents. Witness l approves every agent's top l
    alternatives and deviates uniformly onto the level-l alternatives, giving
    every agent utility exactly 2^-(k-l).
    """
    if k < 2:
        raise ValueError("need k >= 2")
    n = 2 ** (k - 1)
    m = 2 ** k - 1
    orders = []
    for i in range(n):
        top = [2 ** (k - level) + i // (2 ** (level - 1)) - 1 for level in range(1, k + 1)]
        orders.append(tuple(top + _cyclic_fill(top, m, i)))
    profile = PreferenceProfile(m=m, orders=tuple(orders), weights=(1,) * n)

    witnesses = []
    for level in range(1, k + 1):
        rows = tuple(prefix_utility_row(order, level, m, exact=True)
                     for order in profile.orders)
        u = UtilityProfile(utils=rows, class_tag=UtilityClass.APPROVAL,
                           weights=profile.weights)
        lo = 2 ** (k - level) - 1                       # 0-indexed level block
        share = Fraction(1, 2 ** (k - level))
        probs = [Fraction(0)] * m
        for a in range(lo, lo + 2 ** (k - level)):
            probs[a] = share
        witnesses.append(FixtureWitness(
            name=f"level-{level}", utilities=u, deviation=Distribution(tuple(probs))))
    return FixtureBundle(profile=profile, witnesses=tuple(witnesses),
                         claimed_bound=k / 2.0,
                         params={"k": k, "n": n, "m": m})


def gen_cyclic_special(m: int, r: int, prefix_width: int,
                       witness_kind: str = "approval") -> FixtureBundle:
    """n = m-1 agents all rank a special alternative at position r; the other
    alternatives fill the remaining positions cyclically, one appearance per
    position. The witness values each agent's top `prefix_width` alternatives
    (approval 1s, or uniform 1/width for the unit-sum variant)."""
    if not 1 <= r <= m:
        raise ValueError(f"rank {r} out of range 1..{m}")
    if not 1 <= prefix_width <= m:
        raise ValueError(f"prefix width {prefix_width} out of range 1..{m}")
    if m < 2:
        raise ValueError("need m >= 2")
    special = m - 1
    n = m - 1
    orders = []
    for i in range(n):
        order = []
        j = 0
        for pos in range(1, m + 1):
            if pos == r:
                order.append(special)
            else:
                order.append((i + j) % (m - 1))
                j += 1
        orders.append(tuple(order))
    profile = PreferenceProfile(m=m, orders=tuple(orders), weights=(1,) * n)

    uniform = witness_kind == "uniform"
    if witness_kind not in ("approval", "uniform"):
        raise ValueError(f"unknown witness kind {witness_kind!r}")
    rows = tuple(prefix_utility_row(order, prefix_width, m, uniform=uniform, exact=True)
                 for order in profile.orders)
    tag = UtilityClass.UNIT_SUM if uniform else UtilityClass.APPROVAL
    u = UtilityProfile(utils=rows, class_tag=tag, weights=profile.weights)
    witness = FixtureWitness(name="prefix", utilities=u,
                             deviation=Distribution.point_mass(m, special, exact=True))
    return FixtureBundle(profile=profile, witnesses=(witness,),
                         claimed_bound=0.0,
                         params={"m": m, "n": n, "r": r, "width": prefix_width,
                                 "special": special, "witness_kind": witness_kind})


def _round_positive(value: float) -> int:
    return max(1, math.floor(value + 0.5))


def harmonic_distortion_fixture(m: int) -> FixtureBundle:
    """Unit-sum worst case for the harmonic rule: the special alternative sits
    at rank k = round(sqrt(m / (2 H_m))) with a uniform 1/k prefix witness;
    the measured distortion is at least min(m/2, sqrt(m H_m / 8))."""
    hm = float(harmonic_number(m))
    k = _round_positive(math.sqrt(m / (2.0 * hm)))
    bundle = gen_cyclic_special(m, r=k, prefix_width=k, witness_kind="uniform")
    bound = min(m / 2.0, math.sqrt(m * hm / 8.0))
    return FixtureBundle(profile=bundle.profile, witnesses=bundle.witnesses,
                         claimed_bound=bound, params=bundle.params)


def harmonic_pf_fixture(m: int) -> FixtureBundle:
    """Proportional-fairness worst case for the harmonic rule: rank
    r = round(sqrt(m / H_m)) with an approval prefix witness of the same
    width; the measured PF value is at least sqrt(m H_m) / 2."""
    hm = float(harmonic_number(m))
    r = _round_positive(math.sqrt(m / hm))
    bundle = gen_cyclic_special(m, r=r, prefix_width=r, witness_kind="approval")
    bound = math.sqrt(m * hm) / 2.0
    return FixtureBundle(profile=bundle.profile, witnesses=bundle.witnesses,
                         claimed_bound=bound, params=bundle.params)
