import pytest
from hypothesis import given, settings, strategies as st

from cardauct.instances import NamedInstance, RandomSpec, generate, random_instance
from cardauct.model import Bid, Instance, InputError, NoAllocationError, units
from cardauct.oracle import brute_sigma
from cardauct.sigma import (
    allocate, best_without, best_without_rebuild, build, find_i_star, next_eligible_bid,
    pick_k_star, sigma, sigma_table, sigma_table_naive,
)

U = units

bids_strategy = st.lists(
    st.tuples(st.integers(0, 30), st.integers(1, 9)), min_size=1, max_size=9,
).map(lambda rows: Instance(Bid(i, a * 1000, c) for i, (a, c) in enumerate(rows)))


def test_seesaw_values():
    table = sigma_table(generate(NamedInstance.SEESAW).instance)
    assert table.sigma[:5] == (U(1000), U(800), U(1200), U(1190), U(1290))
    assert table.k_star == 5
    assert table == sigma_table_naive(generate(NamedInstance.SEESAW).instance)


def test_example2_table():
    table = sigma_table(generate(NamedInstance.EXAMPLE2_TRUTHFUL).instance)
    assert table.sigma == (U(100), U(150), None)
    assert table.k_star == 2
    assert table.i_star == (1, 3, None)


@given(bids_strategy)
@settings(max_examples=300, deadline=None)
def test_table_matches_scan_and_brute(inst):
    table = sigma_table(inst)
    assert table == sigma_table_naive(inst)
    assert list(table.sigma) == [brute_sigma(inst, k) for k in range(1, len(inst) + 1)]


@given(bids_strategy)
@settings(max_examples=200, deadline=None)
def test_counts_and_sums(inst):
    rs = build(inst)
    ranked = inst.ranked
    n = len(inst)
    for i in range(n + 1):
        for k in range(n + 2):
            chosen = [b for b in ranked[:i] if min(b.cap, n) >= k]
            assert rs.count(i, k) == len(chosen)
            assert rs.range_sum(i, k) == sum(b.amount for b in chosen)


@given(bids_strategy, st.data())
@settings(max_examples=200, deadline=None)
def test_find_i_star_is_kth_eligible(inst, data):
    rs = build(inst)
    k = data.draw(st.integers(1, len(inst)))
    eligible = [r for r, b in enumerate(inst.ranked, start=1) if b.cap >= k]
    want = eligible[k - 1] if len(eligible) >= k else None
    assert find_i_star(rs, k) == want
    assert sigma(rs, k) == brute_sigma(inst, k)


def test_k_out_of_range():
    rs = build(Instance([Bid(0, 5, 1)]))
    with pytest.raises(InputError):
        find_i_star(rs, 0)
    with pytest.raises(InputError):
        sigma(rs, 2)


def test_count_rank_out_of_range():
    rs = build(Instance([Bid(0, 5, 1)]))
    with pytest.raises(InputError):
        rs.count(2, 1)


def test_empty_instance_cannot_build():
    with pytest.raises(InputError):
        build(Instance([]))


def test_tie_k_rule():
    # sizes 1 and 2 both reach 10
    inst = Instance([Bid(0, 10, 1), Bid(1, 5, 2), Bid(2, 5, 2)])
    assert sigma_table(inst, "smallest").k_star == 1
    assert sigma_table(inst, "largest").k_star == 2
    assert sigma_table_naive(inst, tie_k="largest").k_star == 2


def test_pick_k_star_all_undefined():
    assert pick_k_star([None, None]) is None


def test_naive_ell_limits_sizes():
    table = sigma_table_naive(generate(NamedInstance.SEESAW).instance, ell=3)
    assert len(table.sigma) == 3
    assert table.k_star == 3


def test_non_unimodal_witness():
    s = sigma_table(generate(NamedInstance.SEESAW).instance).sigma
    assert s[0] > s[1] < s[2] > s[3]


def test_allocate():
    inst = generate(NamedInstance.EXAMPLE2_TRUTHFUL).instance
    assert allocate(inst, 2).winners == (1, 2)
    with pytest.raises(NoAllocationError):
        allocate(inst, 3)


def test_allocate_wins_ties_by_id():
    inst = Instance([Bid(4, 5, 2), Bid(2, 5, 2), Bid(9, 5, 2)])
    assert allocate(inst, 2).winners == (2, 4)


@given(bids_strategy)
@settings(max_examples=200, deadline=None)
def test_best_without_matches_rebuild(inst):
    table = sigma_table(inst)
    rs = build(inst)
    ids = [b.bidder_id for b in inst.bids]
    fast = best_without(inst, table, ids, rs)
    assert fast == {i: best_without_rebuild(inst, i) for i in ids}


def test_next_eligible_bid():
    inst = generate(NamedInstance.EXAMPLE2_TRUTHFUL).instance
    assert next_eligible_bid(inst, 1, build(inst)) == U(80)
    assert next_eligible_bid(inst, 2, build(inst)) is None
    assert next_eligible_bid(inst, 1) == U(80)


def test_large_amounts_use_exact_arithmetic():
    big = 2**61
    inst = Instance([Bid(i, big, 4) for i in range(4)])
    assert inst.amounts.dtype == object
    assert sigma_table(inst).best == 4 * big


def test_large_random_matches_scan():
    inst = random_instance(RandomSpec(n=3000, seed=3, max_steps=500))
    assert sigma_table(inst) == sigma_table_naive(inst)


def test_table_json_uses_decimal_strings():
    j = sigma_table(generate(NamedInstance.EXAMPLE2_TRUTHFUL).instance).to_json()
    assert j == {"sigma": ["100", "150", None], "i_star": [1, 3, None], "k_star": 2}
