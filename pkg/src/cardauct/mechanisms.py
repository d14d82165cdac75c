"""The four auctions: MPP and VCG over cardinal caps, pVCG and pGSP over prefixes."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Optional, Sequence, Union

from .model import (
    Allocation, Bid, Instance, InputError, Money, PricedOutcome, Valuation, as_bids,
)
from .sigma import (
    RangeStructure, SigmaTable, TieK, allocate, best_without, build,
    next_eligible_bid, sigma_table, sigma_table_naive,
)

Engine = Literal["auto", "range", "scan"]
Values = Union[Mapping[int, Money], Sequence[Valuation], None]

# below this size the direct scan is cheaper than building the range structure
SCAN_LIMIT = 64


class MechanismKind(str, enum.Enum):
    MPP_CA = "mpp"
    VCG_CA = "vcg"
    PVCG = "pvcg"
    PGSP = "pgsp"

    @property
    def is_prefix(self) -> bool:
        return self in (MechanismKind.PVCG, MechanismKind.PGSP)


def _value_map(valuations: Values) -> Optional[dict[int, Money]]:
    if valuations is None:
        return None
    if isinstance(valuations, Mapping):
        return dict(valuations)
    return {v.bidder_id: v.value for v in valuations}


def _use_scan(instance: Instance, engine: Engine) -> bool:
    if engine not in ("auto", "range", "scan"):
        raise InputError(f"unknown engine {engine!r}")
    return engine == "scan" or (engine == "auto" and len(instance) <= SCAN_LIMIT)


def _table(instance: Instance, tie_k: TieK, scan: bool):
    if scan:
        return sigma_table_naive(instance, tie_k=tie_k), None
    rs = build(instance)
    return sigma_table(instance, tie_k, rs), rs


def _best_without(instance: Instance, table: SigmaTable, ids: Sequence[int],
                  rs: Optional[RangeStructure]) -> dict[int, Money]:
    if rs is not None:
        return best_without(instance, table, ids, rs)
    out = {}
    for i in ids:
        rest = instance.without(i)
        out[i] = max(0, sigma_table_naive(rest).best) if len(rest) else 0
    return out


def second_best_sum(instance: Instance, table: SigmaTable,
                    rs: Optional[RangeStructure] = None) -> Money:
    """Best bid total over feasible allocations whose winner set is not the optimum's.

    Either another size, or the optimal size with its lowest winner swapped
    for the best eligible loser.  The empty allocation counts, so the result
    is never below 0.
    """
    k_star = table.k_star
    best = 0
    for k, s in enumerate(table.sigma, start=1):
        if s is not None and k != k_star:
            best = max(best, s)
    if k_star is not None:
        if rs is None and len(instance) > SCAN_LIMIT:
            rs = build(instance)
        if rs is not None:
            spare = next_eligible_bid(instance, k_star, rs)
        else:
            winners = set(allocate(instance, k_star).winners)
            spare = next((b.amount for b in instance.ranked
                          if b.cap >= k_star and b.bidder_id not in winners), None)
        if spare is not None:
            lowest = instance.by_id[allocate(instance, k_star).winners[-1]].amount
            best = max(best, table.best - lowest + spare)
    return best


def run_mpp(instance: Instance, valuations: Values = None, tie_k: TieK = "smallest",
            engine: Engine = "auto",
            alternative: Literal["excluding", "global"] = "excluding") -> PricedOutcome:
    """Minimum-pay pricing over the bid-maximizing allocation.

    Winner ``i`` (``j``-th highest winning bid) pays the larger of

    * the least bid keeping the winning set optimal: best total without her,
      minus the optimal total, plus her bid;
    * the next winner's bid (0 for the last winner),

    floored at 0.  With ``alternative="global"`` the first term uses the
    single second-best allocation for every winner instead; that overcharges a
    winner who also belongs to the second-best set.
    """
    if len(instance) == 0:
        raise InputError("empty instance")
    scan = _use_scan(instance, engine)
    table, rs = _table(instance, tie_k, scan)
    alloc, prices = mpp_prices(instance, table, rs, alternative)
    vals = _value_map(valuations)
    eff = table.best if vals is None else sum(vals[w] for w in alloc.winners)
    return PricedOutcome("mpp", alloc, prices, eff)


def mpp_prices(instance: Instance, table: SigmaTable, rs: Optional[RangeStructure] = None,
               alternative: Literal["excluding", "global"] = "excluding"):
    """Winners and minimum-pay prices once the table is known."""
    alloc = allocate(instance, table.k_star)
    total = table.best
    if alternative == "global":
        s2 = second_best_sum(instance, table, rs)
        excl = {w: s2 for w in alloc.winners}
    elif alternative == "excluding":
        excl = _best_without(instance, table, alloc.winners, rs)
    else:
        raise InputError(f"unknown alternative {alternative!r}")
    amounts = [instance.by_id[w].amount for w in alloc.winners]
    prices = {}
    for j, w in enumerate(alloc.winners):
        below = amounts[j + 1] if j + 1 < len(amounts) else 0
        prices[w] = max(excl[w] - total + amounts[j], below, 0)
    return alloc, prices


def run_vcg(reports: Union[Instance, Iterable[Union[Bid, Valuation]]], valuations: Values = None,
            tie_k: TieK = "smallest", engine: Engine = "auto") -> PricedOutcome:
    """VCG over cardinal caps: pay the welfare loss imposed on the others."""
    instance = reports if isinstance(reports, Instance) else Instance(reports)
    if len(instance) == 0:
        raise InputError("empty instance")
    scan = _use_scan(instance, engine)
    table, rs = _table(instance, tie_k, scan)
    alloc = allocate(instance, table.k_star)
    total = table.best
    excl = _best_without(instance, table, alloc.winners, rs)
    prices = {w: max(0, excl[w] - total + instance.by_id[w].amount) for w in alloc.winners}
    vals = _value_map(valuations)
    eff = total if vals is None else sum(vals[w] for w in alloc.winners)
    return PricedOutcome("vcg", alloc, prices, eff)


@dataclass(frozen=True)
class PrefixInstance:
    """Ordered copies ``1..max_items``; a bid's cap is the deepest copy it accepts."""

    bids: tuple[Bid, ...]
    max_items: int

    def __init__(self, bids: Iterable[Union[Bid, Valuation]], max_items: int):
        if max_items < 1:
            raise InputError(f"max_items must be >= 1, got {max_items}")
        inst = Instance(bids)
        object.__setattr__(self, "bids", inst.bids)
        object.__setattr__(self, "max_items", max_items)

    @property
    def instance(self) -> Instance:
        return Instance(self.bids)


def _prefix_assign(ranked: Sequence[Bid], m: int, skip: Optional[int] = None) -> dict[int, int]:
    """Greedy by bid: each bid takes the deepest free copy it accepts."""
    parent = list(range(m + 1))

    def free_at_or_above(p: int) -> int:
        root = p
        while parent[root] != root:
            root = parent[root]
        while parent[p] != root:
            parent[p], p = root, parent[p]
        return root

    out = {}
    for b in ranked:
        if b.bidder_id == skip:
            continue
        p = free_at_or_above(min(b.cap, m))
        if p > 0:
            out[b.bidder_id] = p
            parent[p] = p - 1
    return out


def _prefix_outcome(name: str, positions: dict[int, int], prices: dict[int, Money],
                    efficiency: Money) -> PricedOutcome:
    winners = tuple(sorted(positions, key=positions.get))
    return PricedOutcome(name, Allocation(len(winners), winners), prices, efficiency,
                         positions=dict(positions))


def run_pvcg(p: PrefixInstance, valuations: Values = None) -> PricedOutcome:
    inst = p.instance
    by_id = inst.by_id
    positions = _prefix_assign(inst.ranked, p.max_items)
    total = sum(by_id[w].amount for w in positions)
    prices = {}
    for w in positions:
        rest = _prefix_assign(inst.ranked, p.max_items, skip=w)
        without = sum(by_id[j].amount for j in rest)
        prices[w] = without - total + by_id[w].amount
    vals = _value_map(valuations)
    eff = total if vals is None else sum(vals[w] for w in positions)
    return _prefix_outcome("pvcg", positions, prices, eff)


def run_pgsp(p: PrefixInstance, valuations: Values = None) -> PricedOutcome:
    """Second-price auction for each copy in order among unassigned bids accepting it."""
    inst = p.instance
    left = list(inst.ranked)
    positions, prices = {}, {}
    for t in range(1, p.max_items + 1):
        eligible = [b for b in left if b.cap >= t]
        if not eligible:
            break
        win = eligible[0]
        positions[win.bidder_id] = t
        prices[win.bidder_id] = eligible[1].amount if len(eligible) > 1 else 0
        left.remove(win)
    vals = _value_map(valuations)
    by_id = inst.by_id
    eff = sum((by_id[w].amount if vals is None else vals[w]) for w in positions)
    return _prefix_outcome("pgsp", positions, prices, eff)


def run(kind: Union[MechanismKind, str], bids: Iterable[Union[Bid, Valuation]],
        items: Optional[int] = None, valuations: Values = None, tie_k: TieK = "smallest",
        engine: Engine = "auto") -> PricedOutcome:
    kind = MechanismKind(kind)
    if kind.is_prefix:
        bids = list(bids)
        p = PrefixInstance(bids, items if items is not None else len(bids))
        return run_pvcg(p, valuations) if kind is MechanismKind.PVCG else run_pgsp(p, valuations)
    inst = Instance(bids)
    if kind is MechanismKind.MPP_CA:
        return run_mpp(inst, valuations, tie_k, engine)
    return run_vcg(inst, valuations, tie_k, engine)
