import pytest
from hypothesis import given, strategies as st

from cardauct.mechanisms import run_mpp, run_pvcg, PrefixInstance
from cardauct.model import (
    EPSILON, MICRO, NEG_INF, Allocation, Bid, Instance, InputError, Valuation, format_money,
    is_feasible, parse_money, units, utility,
)


@given(st.integers(min_value=-10**15, max_value=10**15))
def test_money_round_trip(m):
    assert parse_money(format_money(m)) == m


@pytest.mark.parametrize("text,want", [
    ("0", 0), ("12", 12 * MICRO), ("0.000001", EPSILON), ("1.5", 1_500_000),
    (" 7.250000 ", 7_250_000), ("1.0000000", MICRO),
])
def test_parse_money(text, want):
    assert parse_money(text) == want


@pytest.mark.parametrize("text", ["abc", "1.0000001", "nan", "inf", ""])
def test_parse_money_rejects(text):
    with pytest.raises(InputError):
        parse_money(text)


def test_format_money_trims():
    assert format_money(units(30)) == "30"
    assert format_money(units(100) + EPSILON) == "100.000001"
    assert format_money(2_500_000) == "2.5"


@pytest.mark.parametrize("args", [(-1, 5, 1), (0, -5, 1), (0, 5, 0)])
def test_bid_validation(args):
    with pytest.raises(InputError):
        Bid(*args)
    with pytest.raises(InputError):
        Valuation(*args)


def test_instance_rejects_duplicate_ids():
    with pytest.raises(InputError):
        Instance([Bid(1, 5, 1), Bid(1, 6, 2)])


def test_canonical_order_breaks_ties_by_id():
    inst = Instance([Bid(3, 10, 1), Bid(1, 10, 2), Bid(2, 20, 1)])
    assert [b.bidder_id for b in inst.ranked] == [2, 1, 3]
    assert inst.rank_of == {2: 1, 1: 2, 3: 3}


def test_caps_clamped_to_n():
    inst = Instance([Bid(0, 5, 99), Bid(1, 4, 1)])
    assert inst.caps.tolist() == [2, 1]


def test_replace_unknown_bidder():
    with pytest.raises(InputError):
        Instance([Bid(0, 5, 1)]).replace(Bid(9, 1, 1))


def test_allocation_size_must_match():
    with pytest.raises(InputError):
        Allocation(2, (1,))


def test_feasibility():
    inst = Instance([Bid(0, 5, 1), Bid(1, 4, 2), Bid(2, 3, 2)])
    assert is_feasible(Allocation(2, (1, 2)), inst)
    assert not is_feasible(Allocation(2, (0, 1)), inst)
    assert is_feasible(Allocation(1, (0,)), inst)
    with pytest.raises(InputError):
        is_feasible(Allocation(1, (7,)), inst)


@given(st.lists(st.integers(1, 6), min_size=1, max_size=6), st.data())
def test_feasibility_monotone_in_caps(caps, data):
    """Raising any cap never makes a feasible allocation infeasible."""
    n = len(caps)
    inst = Instance(Bid(i, 1, c) for i, c in enumerate(caps))
    k = data.draw(st.integers(1, n))
    winners = tuple(data.draw(st.permutations(range(n)))[:k])
    alloc = Allocation(k, winners)
    j = data.draw(st.integers(0, n - 1))
    raised = inst.replace(Bid(j, 1, caps[j] + 1))
    if is_feasible(alloc, inst):
        assert is_feasible(alloc, raised)


def test_utility_cap_boundary():
    out = run_mpp(Instance([Bid(0, units(10), 2), Bid(1, units(8), 2)]))
    assert out.allocation.k == 2
    assert utility(Valuation(0, units(10), 2), out) == units(10) - out.prices[0]
    assert utility(Valuation(0, units(10), 1), out) == NEG_INF


def test_loser_utility_is_zero_even_above_cap():
    out = run_mpp(Instance([Bid(0, units(10), 3), Bid(1, units(9), 3), Bid(2, units(8), 3),
                            Bid(3, units(1), 1)]))
    assert 3 not in out.prices
    assert utility(Valuation(3, units(1), 1), out) == 0


def test_prefix_utility_uses_position():
    out = run_pvcg(PrefixInstance([Bid(0, units(10), 2), Bid(1, units(9), 1)], 2))
    assert out.positions == {1: 1, 0: 2}
    assert utility(Valuation(0, units(10), 2), out) != NEG_INF
    assert utility(Valuation(0, units(10), 1), out) == NEG_INF
