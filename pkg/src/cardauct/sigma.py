"""Optimal allocation sizes for cardinal auctions.

For every size ``k`` the best winner set is the first ``k`` bids (in canonical
order) whose cap is at least ``k``.  Finding the cutoff rank of that set is a
dominance count over points ``(rank, cap)``: how many points lie in
``[1, i] x [k, inf)``.  ``RangeStructure`` answers those counts, and the
matching weight sums, with a wavelet matrix over the rank-ordered caps.  One
query walks ``log n`` levels; the cutoff for each ``k`` is a binary search over
``i``, giving ``O(n log^2 n)`` for the whole table.  The binary searches for all
``k`` run side by side as numpy array operations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .model import Allocation, Instance, InputError, Money, NoAllocationError, format_money

TieK = Literal["smallest", "largest"]


class RangeStructure:
    """Static count/sum structure over points ``(rank, cap)`` weighted by bid.

    Ranks are 1-based.  ``count(i, k)`` is the number of the first ``i`` ranked
    bids with cap >= k; ``range_sum(i, k)`` is the total of their amounts.
    """

    def __init__(self, instance: Instance):
        n = len(instance)
        if n == 0:
            raise InputError("cannot build a range structure over an empty instance")
        self.n = n
        self.levels = (n + 1).bit_length()
        weights = instance.amounts
        self.dtype = weights.dtype
        self.prefix = np.concatenate(([0], np.cumsum(weights))).astype(self.dtype)

        vals = instance.caps.copy()
        w = weights.copy()
        idx_t = np.int32 if n < 2**31 - 1 else np.int64
        self._idx = idx_t
        ones, zero_w, nzeros = [], [], []
        for lev in range(self.levels):
            shift = self.levels - 1 - lev
            bits = (vals >> shift) & 1
            ones.append(np.concatenate(([0], np.cumsum(bits))).astype(idx_t))
            zw = np.where(bits == 0, w, 0)
            zero_w.append(np.concatenate(([0], np.cumsum(zw))).astype(self.dtype))
            nzeros.append(int(n - ones[-1][-1]))
            order = np.argsort(bits, kind="stable")
            vals = vals[order]
            w = w[order]
        self._ones = ones
        self._zero_w = zero_w
        self._nzeros = nzeros

    def _below(self, i: np.ndarray, k: np.ndarray, want_sum: bool):
        """Count (and weight) of points among the first ``i`` ranks with cap < k."""
        s = np.zeros(i.shape, dtype=self._idx)
        e = i.astype(self._idx)
        cnt = np.zeros(i.shape, dtype=self._idx)
        tot = np.zeros(i.shape, dtype=self.dtype) if want_sum else None
        for lev in range(self.levels):
            hit = ((k >> (self.levels - 1 - lev)) & 1).astype(bool)
            r1 = self._ones[lev]
            r1s, r1e = r1[s], r1[e]
            s0, e0 = s - r1s, e - r1e
            cnt += np.where(hit, e0 - s0, 0).astype(self._idx, copy=False)
            if want_sum:
                zw = self._zero_w[lev]
                tot += np.where(hit, zw[e] - zw[s], 0)
            z = self._nzeros[lev]
            s = np.where(hit, z + r1s, s0)
            e = np.where(hit, z + r1e, e0)
        return cnt, tot

    def count_many(self, i: np.ndarray, k: np.ndarray) -> np.ndarray:
        i = np.asarray(i, dtype=np.int64)
        k = np.clip(np.asarray(k, dtype=np.int64), 0, self.n + 1)
        below, _ = self._below(i, k, want_sum=False)
        return i - below

    def sum_many(self, i: np.ndarray, k: np.ndarray) -> np.ndarray:
        i = np.asarray(i, dtype=np.int64)
        k = np.clip(np.asarray(k, dtype=np.int64), 0, self.n + 1)
        _, below = self._below(i, k, want_sum=True)
        return self.prefix[i] - below

    def count(self, i: int, k: int) -> int:
        self._check(i)
        return int(self.count_many(np.array([i]), np.array([k]))[0])

    def range_sum(self, i: int, k: int) -> Money:
        self._check(i)
        return int(self.sum_many(np.array([i]), np.array([k]))[0])

    def _check(self, i: int):
        if not 0 <= i <= self.n:
            raise InputError(f"rank {i} outside [0, {self.n}]")

    def kth_eligible(self, k: np.ndarray, target: np.ndarray,
                     lo: Optional[np.ndarray] = None, hi: Optional[np.ndarray] = None) -> np.ndarray:
        """Smallest rank ``i`` with ``count(i, k) >= target``, or 0 if none.

        Binary search run for every entry at once.  Optional ``lo``/``hi``
        bound the answer when it is known to exist; entries drop out of later
        rounds as their interval closes.
        """
        k = np.asarray(k, dtype=np.int64)
        target = np.asarray(target, dtype=np.int64)
        n = self.n
        out = np.zeros(k.shape, dtype=np.int64)
        found = (target <= n) & (self.count_many(np.full_like(k, n), k) >= target)
        idx = np.nonzero(found)[0]
        if idx.size == 0:
            return out
        kk, tt = k[idx], target[idx]
        lo = np.maximum(tt, 1) if lo is None else np.maximum(np.asarray(lo, dtype=np.int64)[idx], 1)
        hi = np.full_like(kk, n) if hi is None else np.asarray(hi, dtype=np.int64)[idx]
        while idx.size:
            live = lo < hi
            if not live.all():
                out[idx[~live]] = lo[~live]
                idx, kk, tt, lo, hi = idx[live], kk[live], tt[live], lo[live], hi[live]
                if not idx.size:
                    break
            mid = (lo + hi) >> 1
            ok = self.count_many(mid, kk) >= tt
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid + 1)
        return out


def build(instance: Instance) -> RangeStructure:
    return RangeStructure(instance)


def _check_k(rs: RangeStructure, k: int):
    if not 1 <= k <= rs.n:
        raise InputError(f"k={k} outside [1, {rs.n}]")


def find_i_star(rs: RangeStructure, k: int) -> Optional[int]:
    """Cutoff rank of the size-``k`` winner set, ``None`` if fewer than k bids qualify."""
    _check_k(rs, k)
    i = int(rs.kth_eligible(np.array([k]), np.array([k]))[0])
    return i or None


def sigma(rs: RangeStructure, k: int) -> Optional[Money]:
    i = find_i_star(rs, k)
    if i is None:
        return None
    return rs.range_sum(i, k)


@dataclass(frozen=True)
class SigmaTable:
    """``sigma[k-1]`` is the best total of exactly ``k`` winners (None if infeasible)."""

    sigma: tuple[Optional[Money], ...]
    i_star: tuple[Optional[int], ...]
    k_star: Optional[int]
    tie_k: TieK = "smallest"

    def value(self, k: int) -> Optional[Money]:
        if k == 0:
            return 0
        return self.sigma[k - 1]

    @property
    def best(self) -> Money:
        return 0 if self.k_star is None else self.sigma[self.k_star - 1]

    def to_json(self) -> dict:
        return {
            "sigma": [None if s is None else format_money(s) for s in self.sigma],
            "i_star": list(self.i_star),
            "k_star": self.k_star,
        }


def pick_k_star(values: Sequence[Optional[Money]], tie_k: TieK = "smallest") -> Optional[int]:
    best_k, best = None, None
    for k, s in enumerate(values, start=1):
        if s is None:
            continue
        if best is None or s > best or (s == best and tie_k == "largest"):
            best_k, best = k, s
    return best_k


# spacing of the first pass over allocation sizes in ``_cutoffs``
_COARSE = 64


def _cutoffs(rs: RangeStructure, ks: np.ndarray) -> np.ndarray:
    """Cutoff rank for every size in ``ks = 1..n`` (0 where undefined).

    The cutoff never decreases with the size: fewer bids qualify and more are
    needed.  A coarse pass over every ``_COARSE``-th size therefore brackets
    the rest, which shortens their searches to the gap between brackets.
    """
    n = rs.n
    coarse = np.unique(np.append(ks[::_COARSE], ks[-1]))
    cc = rs.kth_eligible(coarse, coarse)
    last = int(coarse[cc > 0][-1]) if (cc > 0).any() else 0
    pos = np.searchsorted(coarse, ks)          # first coarse size >= k
    below = np.maximum(pos - 1, 0)
    lo = np.where(coarse[below] <= ks, cc[below], 1)
    hi = np.where(ks <= last, cc[np.minimum(pos, len(coarse) - 1)], n)
    hi = np.where(hi > 0, hi, n)
    lo = np.maximum(np.minimum(lo, hi), ks)
    return rs.kth_eligible(ks, ks, lo, hi)


def sigma_table(instance: Instance, tie_k: TieK = "smallest",
                rs: Optional[RangeStructure] = None) -> SigmaTable:
    rs = rs or build(instance)
    ks = np.arange(1, rs.n + 1, dtype=np.int64)
    cut = _cutoffs(rs, ks)
    defined = cut > 0
    sums = rs.sum_many(cut, ks)
    sig = tuple(int(s) if d else None for s, d in zip(sums.tolist(), defined.tolist()))
    istar = tuple(int(c) if d else None for c, d in zip(cut.tolist(), defined.tolist()))
    return SigmaTable(sig, istar, pick_k_star(sig, tie_k), tie_k)


def sigma_table_naive(instance: Instance, ell: Optional[int] = None,
                      tie_k: TieK = "smallest") -> SigmaTable:
    """Direct scan per allocation size, ``O(n * ell)``; the fast path's reference."""
    n = len(instance)
    if n == 0:
        raise InputError("empty instance")
    ell = n if ell is None else ell
    if ell < 1:
        raise InputError(f"ell must be >= 1, got {ell}")
    ranked = instance.ranked
    sig, istar = [], []
    for k in range(1, min(ell, n) + 1):
        taken, total, cutoff = 0, 0, None
        for r, b in enumerate(ranked, start=1):
            if b.cap >= k:
                taken += 1
                total += b.amount
                if taken == k:
                    cutoff = r
                    break
        sig.append(total if cutoff else None)
        istar.append(cutoff)
    return SigmaTable(tuple(sig), tuple(istar), pick_k_star(sig, tie_k), tie_k)


def allocate(instance: Instance, k: int) -> Allocation:
    """The ``k`` highest-ranked bids with cap >= k."""
    if k == 0:
        return Allocation(0, ())
    winners = []
    for b in instance.ranked:
        if b.cap >= k:
            winners.append(b.bidder_id)
            if len(winners) == k:
                return Allocation(k, tuple(winners))
    raise NoAllocationError(f"fewer than {k} bids accept an allocation of size {k}")


def _sparse_max(values: np.ndarray):
    table = [values]
    span = 1
    while 2 * span <= len(values):
        prev = table[-1]
        table.append(np.maximum(prev[:-span], prev[span:]))
        span *= 2
    return table


def _range_max(table, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Max over inclusive 0-based ranges ``[lo, hi]`` (vectorized, non-empty ranges)."""
    length = hi - lo + 1
    lev = np.floor(np.log2(np.maximum(length, 1))).astype(np.int64)
    out = np.empty(len(lo), dtype=table[0].dtype)
    for j in np.unique(lev):
        sel = lev == j
        t = table[j]
        out[sel] = np.maximum(t[lo[sel]], t[hi[sel] - (1 << j) + 1])
    return out


def best_without(instance: Instance, table: SigmaTable, bidder_ids: Sequence[int],
                 rs: Optional[RangeStructure] = None) -> dict[int, Money]:
    """Best feasible bid total once each listed bidder is removed.

    Removing bidder ``i`` only changes sizes ``k`` whose winner set contains
    her; those form the interval ``[lo_i, cap_i]`` where ``lo_i`` is the first
    ``k`` at which at most ``k`` eligible bids rank at or above her.  On that
    interval the replacement total is ``sigma_k`` plus the next eligible bid,
    minus hers.  Outside it ``sigma_k`` is unchanged.
    """
    if not bidder_ids:
        return {}
    rs = rs or build(instance)
    n = rs.n
    dtype = rs.dtype
    neg = np.array(-1, dtype=dtype)

    sig = np.array([neg if s is None else s for s in table.sigma] + [neg] * (n - len(table.sigma)),
                   dtype=dtype)
    ks = np.arange(1, n + 1, dtype=np.int64)
    nxt_rank = rs.kth_eligible(ks, ks + 1)
    with_next = sig.copy()
    has_next = (nxt_rank > 0) & (sig >= 0)
    nxt_amount = instance.amounts[np.maximum(nxt_rank - 1, 0)]
    with_next[has_next] = sig[has_next] + nxt_amount[has_next]
    with_next[~has_next] = neg

    # prefix_max[k] = max sigma over sizes 1..k (index 0 -> empty allocation)
    prefix_max = np.maximum.accumulate(np.concatenate(([0], sig)).astype(dtype))
    suffix_max = np.concatenate((np.maximum.accumulate(sig[::-1])[::-1], [neg])).astype(dtype)
    sparse = _sparse_max(with_next)

    ranks = np.array([instance.rank_of[b] for b in bidder_ids], dtype=np.int64)
    caps = instance.caps[ranks - 1]
    amounts = instance.amounts[ranks - 1]

    # first k in [1, cap] with count(rank, k) <= k; cap + 1 when none
    lo = np.ones_like(ranks)
    hi = caps + 1
    active = lo < hi
    while active.any():
        idx = np.nonzero(active)[0]
        mid = (lo[idx] + hi[idx]) // 2
        ok = rs.count_many(ranks[idx], mid) <= mid
        hi[idx] = np.where(ok, mid, hi[idx])
        lo[idx] = np.where(ok, lo[idx], mid + 1)
        active[idx] = lo[idx] < hi[idx]
    first = lo

    out = np.maximum(prefix_max[np.minimum(first, caps + 1) - 1], suffix_max[caps])
    inside = first <= caps
    if inside.any():
        rm = _range_max(sparse, first[inside] - 1, caps[inside] - 1)
        repl = np.where(rm >= 0, rm - amounts[inside], neg)
        out[inside] = np.maximum(out[inside], repl)
    return {b: int(v) for b, v in zip(bidder_ids, out.tolist())}


def best_without_rebuild(instance: Instance, bidder_id: int) -> Money:
    """Same quantity as ``best_without`` by recomputing the table without the bidder."""
    rest = instance.without(bidder_id)
    if len(rest) == 0:
        return 0
    return max(0, sigma_table(rest).best)


def next_eligible_bid(instance: Instance, k: int, rs: Optional[RangeStructure] = None) -> Optional[Money]:
    """Amount of the best bid with cap >= k outside the size-``k`` winner set."""
    rs = rs or build(instance)
    if not 1 <= k <= rs.n:
        return None
    r = int(rs.kth_eligible(np.array([k]), np.array([k + 1]))[0])
    return int(instance.amounts[r - 1]) if r else None
