"""Pure Nash equilibria of the auctions on a discretized bid grid.

Verdicts are relative to the grid: a profile is an equilibrium when no bidder
has a strictly improving unilateral deviation among grid bids and caps
``1..n``.  Utilities always use the true valuations.
"""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .mechanisms import MechanismKind, run
from .model import (
    NEG_INF, Bid, Instance, InputError, Money, PricedOutcome, Valuation, format_money, utility,
)
from .oracle import BudgetError
from .sigma import sigma_table_naive

MAX_ENUM_BIDDERS = 4
MAX_GRID_POINTS = 50


class ConfigError(InputError):
    """Grid or mode inconsistent with the valuations."""


class EmptyResultError(InputError):
    """No equilibrium found where one was required."""


class BidderMode(str, enum.Enum):
    CONSERVATIVE = "conservative"
    RATIONAL = "rational"


@dataclass(frozen=True)
class BidGrid:
    """Bids ``0, step, 2*step, ...`` up to ``max_multiplier`` times the top valuation.

    Valuations off the lattice are a configuration error unless ``snap`` is
    set, in which case a bidder's truthful grid bid is her value rounded down
    to the lattice.
    """

    step: Money
    max_multiplier: Fraction = Fraction(2)
    snap: bool = False

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError(f"grid step must be positive, got {self.step}")
        if Fraction(self.max_multiplier) < 1:
            raise ConfigError("max_multiplier must be >= 1")

    def points(self, valuations: Sequence[Valuation]) -> list[Money]:
        self.check(valuations)
        top = max((v.value for v in valuations), default=0)
        limit = Fraction(self.max_multiplier) * top
        count = int(limit // self.step)
        return [j * self.step for j in range(count + 1)]

    def check(self, valuations: Sequence[Valuation]):
        if self.snap:
            return
        for v in valuations:
            if v.value % self.step:
                raise ConfigError(
                    f"valuation {format_money(v.value)} of bidder {v.bidder_id} is not on the "
                    f"grid of step {format_money(self.step)}")

    def truthful(self, v: Valuation) -> Bid:
        return Bid(v.bidder_id, v.value - v.value % self.step, v.cap)


@dataclass(frozen=True)
class Deviation:
    bidder_id: int
    bid: Bid
    gain: Union[Money, float]


@dataclass(frozen=True)
class EquilibriumReport:
    profile: tuple[Bid, ...]
    is_nash: bool
    deviation: Optional[Deviation]
    efficiency: Money
    revenue: Money
    outcome: PricedOutcome = field(repr=False, compare=False)

    def to_json(self) -> dict:
        dev = None
        if self.deviation is not None:
            d = self.deviation
            gain = d.gain if isinstance(d.gain, float) else format_money(d.gain)
            dev = {"id": d.bidder_id, "bid": format_money(d.bid.amount), "cap": d.bid.cap,
                   "gain": str(gain)}
        return {
            "profile": [{"id": b.bidder_id, "bid": format_money(b.amount), "cap": b.cap}
                        for b in self.profile],
            "is_nash": self.is_nash,
            "deviation": dev,
            "winners": [{"id": w, "price": format_money(self.outcome.prices[w])}
                        for w in self.outcome.winners],
            "efficiency": format_money(self.efficiency),
            "revenue": format_money(self.revenue),
        }


def _outcome(mechanism: MechanismKind, profile: Sequence[Bid], valuations: Sequence[Valuation],
             items: Optional[int]) -> PricedOutcome:
    return run(mechanism, profile, items=items, valuations=valuations)


def _allowed_bids(v: Valuation, points: Sequence[Money], mode: BidderMode) -> list[Money]:
    if mode is BidderMode.CONSERVATIVE:
        return [p for p in points if p <= v.value]
    return list(points)


def _check_profile(valuations: Sequence[Valuation], profile: Sequence[Bid], mode: BidderMode):
    if [v.bidder_id for v in valuations] != [b.bidder_id for b in profile]:
        raise InputError("profile and valuations must list the same bidders in the same order")
    n = len(profile)
    for b in profile:
        if not 1 <= b.cap <= max(n, 1):
            raise InputError(f"reported cap {b.cap} of bidder {b.bidder_id} outside 1..{n}")
    if mode is BidderMode.CONSERVATIVE:
        for v, b in zip(valuations, profile):
            if b.amount > v.value:
                raise InputError(f"conservative bidder {b.bidder_id} bids above value")


def is_nash(valuations: Sequence[Valuation], profile: Sequence[Bid],
            mechanism: Union[MechanismKind, str], grid: BidGrid,
            mode: Union[BidderMode, str] = BidderMode.CONSERVATIVE,
            items: Optional[int] = None,
            outcome: Optional[PricedOutcome] = None) -> EquilibriumReport:
    """Search every unilateral grid deviation; report the first strictly improving one.

    Deviations are scanned bidder by bidder (profile order), caps ascending,
    then bids ascending.  In rational mode a winner paying above her value
    always has an improving deviation (bid 0 at her true cap), so such
    profiles never pass.
    """
    mechanism = MechanismKind(mechanism)
    mode = BidderMode(mode)
    valuations = list(valuations)
    profile = tuple(profile)
    _check_profile(valuations, profile, mode)
    points = grid.points(valuations)
    n = len(profile)
    base = outcome if outcome is not None else _outcome(mechanism, profile, valuations, items)
    report = dict(profile=profile, efficiency=base.efficiency, revenue=base.revenue, outcome=base)
    for j, v in enumerate(valuations):
        u0 = utility(v, base)
        for cap in range(1, n + 1):
            for amount in _allowed_bids(v, points, mode):
                alt = Bid(v.bidder_id, amount, cap)
                if alt == profile[j]:
                    continue
                trial = profile[:j] + (alt,) + profile[j + 1:]
                u1 = utility(v, _outcome(mechanism, trial, valuations, items))
                if u1 > u0:
                    gain = u1 - u0 if u0 != NEG_INF else float("inf")
                    return EquilibriumReport(is_nash=False,
                                             deviation=Deviation(v.bidder_id, alt, gain), **report)
    return EquilibriumReport(is_nash=True, deviation=None, **report)


def _strategies(valuations, points, mode, grid, enumerate_caps):
    n = len(valuations)
    out = []
    for v in valuations:
        caps = range(1, n + 1) if enumerate_caps else [min(v.cap, n)]
        out.append([Bid(v.bidder_id, a, c) for c in caps for a in _allowed_bids(v, points, mode)])
    return out


def _losers_truthful(outcome: PricedOutcome, profile, truthful: dict[int, Bid]) -> bool:
    won = set(outcome.winners)
    return all(b == truthful[b.bidder_id] for b in profile if b.bidder_id not in won)


def _scan(args):
    valuations, mechanism, grid, mode, items, enumerate_caps, pin_losers, head = args
    points = grid.points(valuations)
    strategies = _strategies(valuations, points, mode, grid, enumerate_caps)
    n = len(valuations)
    truthful = {v.bidder_id: Bid(v.bidder_id, grid.truthful(v).amount, min(v.cap, n))
                for v in valuations}
    found = []
    firsts = [strategies[0][head]] if head is not None else strategies[0]
    for profile in itertools.product(firsts, *strategies[1:]):
        outcome = _outcome(mechanism, profile, valuations, items)
        if pin_losers and not _losers_truthful(outcome, profile, truthful):
            continue
        rep = is_nash(valuations, profile, mechanism, grid, mode, items, outcome=outcome)
        if rep.is_nash:
            found.append(rep)
    return found


def enumerate_equilibria(valuations: Sequence[Valuation], mechanism: Union[MechanismKind, str],
                         grid: BidGrid, mode: Union[BidderMode, str] = BidderMode.CONSERVATIVE,
                         items: Optional[int] = None, enumerate_caps: bool = False,
                         pin_losers: bool = True, workers: int = 1) -> list[EquilibriumReport]:
    """All grid equilibria, in profile order.

    With ``pin_losers`` a profile is kept only if every loser bids her
    truthful grid bid and true cap.  Reported caps are the true caps unless
    ``enumerate_caps`` is set.
    """
    mechanism = MechanismKind(mechanism)
    mode = BidderMode(mode)
    valuations = list(valuations)
    n = len(valuations)
    if n == 0:
        raise InputError("no bidders")
    if n > MAX_ENUM_BIDDERS:
        raise BudgetError(f"{n} bidders exceeds enumeration budget of {MAX_ENUM_BIDDERS}")
    points = grid.points(valuations)
    if len(points) > MAX_GRID_POINTS:
        raise BudgetError(f"{len(points)} grid points exceeds budget of {MAX_GRID_POINTS}")
    base = (valuations, mechanism, grid, mode, items, enumerate_caps, pin_losers)
    if workers <= 1:
        return _scan(base + (None,))
    heads = len(_strategies(valuations, points, mode, grid, enumerate_caps)[0])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_scan, [base + (h,) for h in range(heads)]))
    return [rep for part in parts for rep in part]


def optimal_efficiency(valuations: Sequence[Valuation], mechanism: Union[MechanismKind, str],
                       items: Optional[int] = None) -> Money:
    """Best achievable total value in the mechanism's model (cardinal or prefix)."""
    mechanism = MechanismKind(mechanism)
    if mechanism.is_prefix:
        return run(MechanismKind.PVCG, valuations, items=items).efficiency
    return sigma_table_naive(Instance(valuations)).best


@dataclass(frozen=True)
class RatioResult:
    ratio: Optional[Fraction]
    numerator: Money
    denominator: Money
    witness: Optional[EquilibriumReport]
    equilibria: int

    def to_json(self) -> dict:
        return {
            "ratio": None if self.ratio is None else f"{self.ratio.numerator}/{self.ratio.denominator}",
            "numerator": format_money(self.numerator),
            "denominator": format_money(self.denominator),
            "equilibria": self.equilibria,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


def _ratio(num: Money, den: Money) -> Optional[Fraction]:
    if den == 0:
        return Fraction(1) if num == 0 else None
    return Fraction(num, den)


def poa(valuations: Sequence[Valuation], mechanism: Union[MechanismKind, str], grid: BidGrid,
        mode: Union[BidderMode, str] = BidderMode.CONSERVATIVE, items: Optional[int] = None,
        equilibria: Optional[list[EquilibriumReport]] = None, **kw) -> RatioResult:
    """Optimal efficiency over the worst equilibrium efficiency (None if that is 0)."""
    eqs = equilibria if equilibria is not None else enumerate_equilibria(
        valuations, mechanism, grid, mode, items, **kw)
    if not eqs:
        raise EmptyResultError("no equilibrium on this grid")
    worst = min(eqs, key=lambda r: r.efficiency)
    best = optimal_efficiency(valuations, mechanism, items)
    return RatioResult(_ratio(best, worst.efficiency), best, worst.efficiency, worst, len(eqs))


def revenue_comparison(valuations: Sequence[Valuation], grid: BidGrid,
                       mode: Union[BidderMode, str] = BidderMode.CONSERVATIVE,
                       mechanism: Union[MechanismKind, str] = MechanismKind.MPP_CA,
                       items: Optional[int] = None,
                       equilibria: Optional[list[EquilibriumReport]] = None, **kw) -> RatioResult:
    """Lowest equilibrium revenue relative to the truthful VCG-style benchmark.

    The benchmark is VCG for the cardinal auctions and pVCG for pGSP.  The
    ratio is None when the benchmark revenue is 0.
    """
    mechanism = MechanismKind(mechanism)
    bench = MechanismKind.PVCG if mechanism.is_prefix else MechanismKind.VCG_CA
    ref = run(bench, valuations, items=items, valuations=valuations).revenue
    eqs = equilibria if equilibria is not None else enumerate_equilibria(
        valuations, mechanism, grid, mode, items, **kw)
    if not eqs:
        raise EmptyResultError("no equilibrium on this grid")
    worst = min(eqs, key=lambda r: r.revenue)
    ratio = None if ref == 0 else Fraction(worst.revenue, ref)
    return RatioResult(ratio, worst.revenue, ref, worst, len(eqs))


@dataclass(frozen=True)
class Trajectory:
    profiles: tuple[tuple[Bid, ...], ...]
    converged: bool
    rounds: int
    moves: tuple[tuple[int, int, Bid, Bid], ...]  # (round, bidder, old, new)


def best_response(v: Valuation, profile: tuple[Bid, ...], j: int, mechanism: MechanismKind,
                  points, mode: BidderMode, items: Optional[int]):
    """Utility-maximizing grid bid for bidder ``j``; ties go to the lower bid, then lower cap."""
    n = len(profile)
    best_bid, best_u = None, None
    for amount in _allowed_bids(v, points, mode):
        for cap in range(1, n + 1):
            alt = Bid(v.bidder_id, amount, cap)
            trial = profile[:j] + (alt,) + profile[j + 1:]
            u = utility(v, run(mechanism, trial, items=items))
            if best_u is None or u > best_u:
                best_bid, best_u = alt, u
    return best_bid, best_u


def best_response_dynamics(valuations: Sequence[Valuation], initial_profile: Sequence[Bid],
                           mechanism: Union[MechanismKind, str], grid: BidGrid,
                           mode: Union[BidderMode, str] = BidderMode.CONSERVATIVE,
                           max_rounds: int = 20, items: Optional[int] = None) -> Trajectory:
    """Round-robin best responses; a bidder moves only on strict improvement."""
    mechanism = MechanismKind(mechanism)
    mode = BidderMode(mode)
    valuations = list(valuations)
    profile = tuple(initial_profile)
    _check_profile(valuations, profile, mode)
    points = grid.points(valuations)
    history = [profile]
    moves = []
    for rnd in range(1, max_rounds + 1):
        changed = False
        for j, v in enumerate(valuations):
            current = utility(v, run(mechanism, profile, items=items))
            bid, u = best_response(v, profile, j, mechanism, points, mode, items)
            if u > current:
                moves.append((rnd, v.bidder_id, profile[j], bid))
                profile = profile[:j] + (bid,) + profile[j + 1:]
                changed = True
        history.append(profile)
        if not changed:
            return Trajectory(tuple(history), True, rnd, tuple(moves))
    return Trajectory(tuple(history), False, max_rounds, tuple(moves))
