"""Domain types shared by every mechanism.

Money is a plain ``int`` counting micro-units (10**-6 of a currency unit), so
no mechanism ever rounds.  Bids and valuations are immutable; an
``Instance`` fixes the canonical order (amount descending, id ascending)
that all tie-breaking in the package follows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

Money = int

MICRO = 1_000_000
EPSILON: Money = 1
NEG_INF = float("-inf")


class InputError(ValueError):
    """Malformed bids, unknown bidders, or out-of-range parameters."""


class NoAllocationError(InputError):
    """Raised when a requested allocation size has no feasible winner set."""


def units(x: Union[int, str, Decimal]) -> Money:
    """Whole currency units (or a decimal string) to micro-units."""
    if isinstance(x, int):
        return x * MICRO
    return parse_money(str(x))


def parse_money(text: str) -> Money:
    text = text.strip()
    try:
        d = Decimal(text)
    except InvalidOperation as exc:
        raise InputError(f"not a decimal amount: {text!r}") from exc
    if not d.is_finite():
        raise InputError(f"not a finite amount: {text!r}")
    if d.as_tuple().exponent < -6:
        scaled = d.normalize()
        if scaled.as_tuple().exponent < -6:
            raise InputError(f"more than 6 fractional digits: {text!r}")
    return int(d * MICRO)


def format_money(m: Money) -> str:
    sign = "-" if m < 0 else ""
    whole, frac = divmod(abs(m), MICRO)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:06d}".rstrip("0")


@dataclass(frozen=True)
class Bid:
    bidder_id: int
    amount: Money
    cap: int

    def __post_init__(self):
        if self.bidder_id < 0:
            raise InputError(f"bidder_id must be >= 0, got {self.bidder_id}")
        if self.amount < 0:
            raise InputError(f"bid amount must be >= 0, got {self.amount}")
        if self.cap < 1:
            raise InputError(f"cap must be >= 1, got {self.cap}")


@dataclass(frozen=True)
class Valuation:
    bidder_id: int
    value: Money
    cap: int

    def __post_init__(self):
        if self.bidder_id < 0:
            raise InputError(f"bidder_id must be >= 0, got {self.bidder_id}")
        if self.value < 0:
            raise InputError(f"value must be >= 0, got {self.value}")
        if self.cap < 1:
            raise InputError(f"cap must be >= 1, got {self.cap}")

    def truthful_bid(self) -> Bid:
        return Bid(self.bidder_id, self.value, self.cap)


def as_bids(items: Iterable[Union[Bid, Valuation]]) -> list[Bid]:
    """Accept bids or valuations; valuations become truthful bids."""
    return [b.truthful_bid() if isinstance(b, Valuation) else b for b in items]


def canonical_key(b: Bid) -> tuple[int, int]:
    return (-b.amount, b.bidder_id)


@dataclass(frozen=True)
class Instance:
    """All bids of one auction, with ranks fixed by the canonical order."""

    bids: tuple[Bid, ...]
    canonical_order: tuple[int, ...] = field(init=False)

    def __init__(self, bids: Iterable[Union[Bid, Valuation]]):
        bids = tuple(as_bids(bids))
        ids = [b.bidder_id for b in bids]
        if len(set(ids)) != len(ids):
            raise InputError("bidder ids must be unique")
        order = tuple(sorted(range(len(bids)), key=lambda j: canonical_key(bids[j])))
        object.__setattr__(self, "bids", bids)
        object.__setattr__(self, "canonical_order", order)

    def __len__(self) -> int:
        return len(self.bids)

    @cached_property
    def ranked(self) -> tuple[Bid, ...]:
        """Bids in canonical order; ``ranked[r - 1]`` has rank ``r``."""
        return tuple(self.bids[j] for j in self.canonical_order)

    @cached_property
    def by_id(self) -> dict[int, Bid]:
        return {b.bidder_id: b for b in self.bids}

    @cached_property
    def rank_of(self) -> dict[int, int]:
        return {b.bidder_id: r for r, b in enumerate(self.ranked, start=1)}

    @cached_property
    def amounts(self) -> np.ndarray:
        """Ranked amounts; object dtype when an int64 running sum could overflow."""
        vals = [b.amount for b in self.ranked]
        dtype = np.int64 if sum(vals) < 2**62 else object
        return np.array(vals, dtype=dtype)

    @cached_property
    def caps(self) -> np.ndarray:
        """Ranked caps clamped to n (a cap above n admits every allocation size)."""
        n = len(self.bids)
        return np.array([min(b.cap, n) for b in self.ranked], dtype=np.int64)

    def without(self, bidder_id: int) -> "Instance":
        return Instance(b for b in self.bids if b.bidder_id != bidder_id)

    def replace(self, bid: Bid) -> "Instance":
        if bid.bidder_id not in self.by_id:
            raise InputError(f"unknown bidder {bid.bidder_id}")
        return Instance(bid if b.bidder_id == bid.bidder_id else b for b in self.bids)


@dataclass(frozen=True)
class Allocation:
    k: int
    winners: tuple[int, ...]

    def __post_init__(self):
        if len(self.winners) != self.k:
            raise InputError(f"allocation of size {self.k} lists {len(self.winners)} winners")


EMPTY_ALLOCATION = Allocation(0, ())


@dataclass(frozen=True)
class PricedOutcome:
    """Result of one mechanism run.

    ``positions`` is set only by the prefix mechanisms, mapping each winner to
    the 1-based copy she received.
    """

    mechanism: str
    allocation: Allocation
    prices: Mapping[int, Money]
    efficiency: Money
    positions: Optional[Mapping[int, int]] = None

    @property
    def revenue(self) -> Money:
        return sum(self.prices.values())

    @property
    def winners(self) -> tuple[int, ...]:
        return self.allocation.winners


def is_feasible(alloc: Allocation, instance: Instance) -> bool:
    by_id = instance.by_id
    for w in alloc.winners:
        if w not in by_id:
            raise InputError(f"unknown bidder {w}")
    if len(alloc.winners) != alloc.k or len(set(alloc.winners)) != alloc.k:
        return False
    return all(by_id[w].cap >= alloc.k for w in alloc.winners)


def utility(valuation: Valuation, outcome: PricedOutcome) -> Union[Money, float]:
    """True utility of one bidder; ``NEG_INF`` for a win outside her cap.

    A win in an allocation of exactly ``cap`` copies is acceptable.  Losers
    get 0 whatever the allocation size.  For prefix outcomes the cap bounds
    the position received instead of the number of copies sold.
    """
    i = valuation.bidder_id
    if i not in outcome.prices:
        return 0
    if outcome.positions is not None:
        depth = outcome.positions[i]
    else:
        depth = outcome.allocation.k
    if depth > valuation.cap:
        return NEG_INF
    return valuation.value - outcome.prices[i]


def efficiency_of(winners: Sequence[int], valuations: Mapping[int, Money]) -> Money:
    return sum(valuations[w] for w in winners)
