"""Named instances from the literature and seeded random corpora.

Amounts are whole currency units; ``EPSILON`` is one micro-unit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import EPSILON, Bid, Instance, InputError, Money, Valuation, units


class NamedInstance(str, enum.Enum):
    SEESAW = "seesaw"
    EXAMPLE1 = "example1"
    EXAMPLE2_TRUTHFUL = "example2"
    EXAMPLE2_DEVIATED = "example2-deviated"
    POA_TIGHT = "poa-tight"
    REVENUE_HALF = "revenue-half"
    PRELIM_SHADING = "prelim-shading"


@dataclass(frozen=True)
class Scenario:
    """True valuations plus the bid profile the example studies."""

    name: str
    valuations: tuple[Valuation, ...]
    bids: tuple[Bid, ...]

    @property
    def instance(self) -> Instance:
        return Instance(self.bids)


def _vals(pairs) -> tuple[Valuation, ...]:
    return tuple(Valuation(i, v, c) for i, (v, c) in enumerate(pairs))


def _bids(pairs) -> tuple[Bid, ...]:
    return tuple(Bid(i, b, c) for i, (b, c) in enumerate(pairs))


def _u(pairs):
    return [(units(a), c) for a, c in pairs]


# (valuations, bid profile or None for truthful)
_TABLE = {
    NamedInstance.SEESAW: (
        _u([(1000, 1), (400, 3), (400, 3), (400, 3), (300, 5), (300, 5), (300, 5), (290, 5),
            (100, 5)]), None),
    NamedInstance.EXAMPLE1: (_u([(100, 1), (90, 2), (80, 2)]), None),
    NamedInstance.EXAMPLE2_TRUTHFUL: (_u([(100, 1), (80, 2), (70, 2)]), None),
    NamedInstance.EXAMPLE2_DEVIATED: (
        _u([(100, 1), (80, 2), (70, 2)]), _u([(100, 1), (40, 2), (70, 2)])),
    NamedInstance.POA_TIGHT: (
        _u([(100, 1), (50, 2)]) + [(EPSILON, 2)], _u([(100, 1), (100, 2), (50, 2)])),
    NamedInstance.REVENUE_HALF: (
        [(units(100) + EPSILON, 1)] + _u([(50, 2), (50, 2)]), _u([(100, 1), (100, 2), (50, 2)])),
    NamedInstance.PRELIM_SHADING: (
        _u([(100, 1), (75, 2), (75, 2)]), _u([(100, 1), (1, 2), (1, 2)])),
}


def generate(name) -> Scenario:
    name = NamedInstance(name)
    vals, profile = _TABLE[name]
    return Scenario(name.value, _vals(vals), _bids(profile if profile is not None else vals))


class ValueDist(str, enum.Enum):
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"


class CapDist(str, enum.Enum):
    UNIFORM_1_N = "uniform"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class RandomSpec:
    n: int
    seed: int = 0
    value_dist: ValueDist = ValueDist.UNIFORM
    cap_dist: CapDist = CapDist.UNIFORM_1_N
    grid_step: Money = units(1)
    max_steps: int = 20  # values lie in grid_step * [1, max_steps]
    max_cap: Optional[int] = None  # defaults to n


def random_instance(spec: RandomSpec) -> Instance:
    """Seeded bids with amounts on the ``grid_step`` lattice and caps in ``1..max_cap``."""
    if spec.n < 1:
        raise InputError(f"n must be >= 1, got {spec.n}")
    if spec.grid_step <= 0 or spec.max_steps < 1:
        raise InputError("grid_step and max_steps must be positive")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    top = spec.max_cap or n
    if ValueDist(spec.value_dist) is ValueDist.UNIFORM:
        steps = rng.integers(1, spec.max_steps + 1, size=n)
    else:
        steps = np.ceil(rng.exponential(spec.max_steps / 4, size=n)).astype(np.int64)
    steps = np.clip(steps, 1, spec.max_steps)
    if CapDist(spec.cap_dist) is CapDist.UNIFORM_1_N:
        caps = rng.integers(1, top + 1, size=n)
    else:
        caps = rng.geometric(0.5, size=n)
    caps = np.clip(caps, 1, top)
    return Instance(Bid(i, int(s) * spec.grid_step, int(c))
                    for i, (s, c) in enumerate(zip(steps.tolist(), caps.tolist())))


def valuations_of(instance: Instance) -> list[Valuation]:
    return [Valuation(b.bidder_id, b.amount, b.cap) for b in instance.bids]


def parse_random(text: str) -> RandomSpec:
    """``"n=12,seed=7,step=5"`` to a ``RandomSpec`` (step in currency units)."""
    fields = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise InputError(f"expected key=value, got {part!r}")
        key, val = (s.strip() for s in part.split("=", 1))
        fields[key] = val
    known = {"n", "seed", "step", "values", "caps", "max_steps", "max_cap"}
    unknown = set(fields) - known
    if unknown or "n" not in fields:
        raise InputError(f"random spec needs n=...; unknown keys {sorted(unknown)}")
    try:
        return RandomSpec(
            n=int(fields["n"]),
            seed=int(fields.get("seed", 0)),
            value_dist=ValueDist(fields.get("values", "uniform")),
            cap_dist=CapDist(fields.get("caps", "uniform")),
            grid_step=units(fields.get("step", "1")),
            max_steps=int(fields.get("max_steps", 20)),
            max_cap=int(fields["max_cap"]) if "max_cap" in fields else None,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
