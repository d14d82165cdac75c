"""Exhaustive reference computations for small instances.

Everything here enumerates bid subsets directly and shares no
code with the fast paths it is used to check.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .model import Allocation, Bid, Instance, InputError, Money, Valuation, as_bids


class BudgetError(InputError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OracleBudget:
    max_n: int = 15

    @classmethod
    def from_env(cls) -> "OracleBudget":
        raw = os.environ.get("CARDAUCT_MAX_ORACLE_N")
        return cls(int(raw)) if raw else cls()

    def check(self, n: int, what: str = "bidders"):
        if n > self.max_n:
            raise BudgetError(f"{n} {what} exceeds oracle budget of {self.max_n}")


def _feasible_subsets(bids: list[Bid]):
    """Yield (winner bids, total) for every subset in which each cap admits its size."""
    n = len(bids)
    for mask in range(1 << n):
        chosen = [bids[j] for j in range(n) if mask >> j & 1]
        k = len(chosen)
        if all(b.cap >= k for b in chosen):
            yield chosen, sum(b.amount for b in chosen)


def _order(chosen: list[Bid]) -> tuple[int, ...]:
    return tuple(b.bidder_id for b in sorted(chosen, key=lambda b: (-b.amount, b.bidder_id)))


def brute_best_allocation(instance: Instance, max_k: Optional[int] = None,
                          tie_k: str = "smallest",
                          budget: Optional[OracleBudget] = None) -> tuple[Allocation, Money]:
    """Max-total feasible subset; ties go to the preferred size, then smallest ids."""
    bids = list(instance.bids)
    (budget or OracleBudget.from_env()).check(len(bids))
    best_key, best = None, None
    for chosen, total in _feasible_subsets(bids):
        k = len(chosen)
        if k == 0 or (max_k is not None and k > max_k):
            continue
        ids = tuple(sorted(b.bidder_id for b in chosen))
        size_pref = k if tie_k == "smallest" else -k
        key = (-total, size_pref, ids)
        if best_key is None or key < best_key:
            best_key, best = key, (Allocation(k, _order(chosen)), total)
    if best is None:
        return Allocation(0, ()), 0
    return best


def brute_sigma(instance: Instance, k: int, budget: Optional[OracleBudget] = None) -> Optional[Money]:
    """Best total of exactly ``k`` feasible winners, or None."""
    bids = list(instance.bids)
    (budget or OracleBudget.from_env()).check(len(bids))
    eligible = [b for b in bids if b.cap >= k]
    if len(eligible) < k:
        return None
    return max(sum(b.amount for b in c) for c in itertools.combinations(eligible, k))


def brute_second_best(instance: Instance, tie_k: str = "smallest",
                      budget: Optional[OracleBudget] = None) -> Money:
    best_alloc, _ = brute_best_allocation(instance, tie_k=tie_k, budget=budget)
    top = set(best_alloc.winners)
    return max(total for chosen, total in _feasible_subsets(list(instance.bids))
               if {b.bidder_id for b in chosen} != top)


def _best_total(bids: list[Bid]) -> Money:
    return max(total for _, total in _feasible_subsets(bids))


def brute_vcg_prices(valuations: Iterable[Union[Bid, Valuation]], tie_k: str = "smallest",
                     budget: Optional[OracleBudget] = None) -> dict[int, Money]:
    bids = as_bids(valuations)
    inst = Instance(bids)
    alloc, best = brute_best_allocation(inst, tie_k=tie_k, budget=budget)
    by_id = inst.by_id
    return {w: _best_total([b for b in bids if b.bidder_id != w]) - best + by_id[w].amount
            for w in alloc.winners}


def brute_prefix_best(bids: Iterable[Union[Bid, Valuation]], max_items: int,
                      budget: Optional[OracleBudget] = None) -> Money:
    """Max total over bid subsets that can be given distinct copies within their caps.

    A subset fits iff, with clipped caps sorted ascending, the ``j``-th cap is
    at least ``j`` (Hall's condition for nested intervals).
    """
    bids = as_bids(bids)
    budget = budget or OracleBudget.from_env()
    budget.check(len(bids))
    budget.check(max_items, "items")
    best = 0
    n = len(bids)
    for mask in range(1 << n):
        chosen = [bids[j] for j in range(n) if mask >> j & 1]
        caps = sorted(min(b.cap, max_items) for b in chosen)
        if all(c >= j for j, c in enumerate(caps, start=1)):
            best = max(best, sum(b.amount for b in chosen))
    return best


def check_min_pay(instance: Instance, tie_k: str = "smallest") -> list[str]:
    """Failures of the minimum-pay property for every MPP winner (empty when it holds).

    Bidding the charged price must keep the winner's assignment (allocation
    size, winner set, and every winner ranked below her); bidding one
    micro-unit less must lose it.  Bidding exactly the price always ties with
    some alternative, so the re-runs resolve that tie for the tested bidder:
    every amount is doubled and her bid gets one extra unit, an infinitesimal
    that cannot flip any strict comparison.
    """
    from .mechanisms import run_mpp

    base = run_mpp(instance, tie_k=tie_k)

    def below(out, w):
        order = out.winners
        return frozenset(order[order.index(w) + 1:])
    doubled = [Bid(b.bidder_id, 2 * b.amount, b.cap) for b in instance.bids]
    failures = []
    for w, price in base.prices.items():
        cap = instance.by_id[w].cap

        def keeps(amount: Money) -> bool:
            trial = Instance(Bid(w, 2 * amount + 1, cap) if b.bidder_id == w else b for b in doubled)
            out = run_mpp(trial, tie_k=tie_k)
            # the extra unit may lift her past an equal bid ranked above her; only
            # winners originally below her must stay below
            return (out.allocation.k == base.allocation.k
                    and set(out.winners) == set(base.winners)
                    and below(base, w) <= below(out, w))

        if not keeps(price):
            failures.append(f"bidder {w}: bidding the price {price} loses the assignment")
        if price > 0 and keeps(price - 1):
            failures.append(f"bidder {w}: bidding {price - 1} still keeps the assignment")
    return failures
