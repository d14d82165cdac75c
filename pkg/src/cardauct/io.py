"""Bid files and JSON reports.

CSV: header ``bidder_id,amount,cap`` with decimal amounts.  JSON: an array of
``{"id": int, "bid": "decimal string", "cap": int}``.  Money always travels as
a decimal string, never a float.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Optional, Union

from .model import Bid, InputError, PricedOutcome, Valuation, format_money, parse_money

CSV_HEADER = ["bidder_id", "amount", "cap"]


def _int(text, what: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError as exc:
        raise InputError(f"{what} must be an integer, got {text!r}") from exc


def parse_bids_csv(text: str) -> list[Bid]:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise InputError(f"bid CSV must start with header {','.join(CSV_HEADER)}")
    bids = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise InputError(f"line {line}: expected 3 fields, got {len(row)}")
        bids.append(Bid(_int(row[0], "bidder_id"), parse_money(row[1]), _int(row[2], "cap")))
    return bids


def parse_bids_json(text: str) -> list[Bid]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise InputError("bid JSON must be an array")
    bids = []
    for item in data:
        if not isinstance(item, dict) or set(item) != {"id", "bid", "cap"}:
            raise InputError(f"bid entries need exactly id, bid, cap: {item!r}")
        if not isinstance(item["bid"], str):
            raise InputError("bid amounts must be decimal strings")
        bids.append(Bid(_int(item["id"], "id"), parse_money(item["bid"]), _int(item["cap"], "cap")))
    return bids


def read_bids(path: Union[str, Path]) -> list[Bid]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".json" or text.lstrip().startswith("["):
        return parse_bids_json(text)
    return parse_bids_csv(text)


def read_valuations(path: Union[str, Path]) -> list[Valuation]:
    return [Valuation(b.bidder_id, b.amount, b.cap) for b in read_bids(path)]


def format_bids_csv(bids: Iterable[Union[Bid, Valuation]]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for b in bids:
        amount = b.amount if isinstance(b, Bid) else b.value
        w.writerow([b.bidder_id, format_money(amount), b.cap])
    return out.getvalue()


def format_bids_json(bids: Iterable[Bid]) -> str:
    return json.dumps([{"id": b.bidder_id, "bid": format_money(b.amount), "cap": b.cap}
                       for b in bids], indent=2) + "\n"


def write_bids(path: Union[str, Path], bids: Iterable[Bid]):
    path = Path(path)
    text = format_bids_json(bids) if path.suffix.lower() == ".json" else format_bids_csv(bids)
    path.write_text(text)


def outcome_to_json(outcome: PricedOutcome, bids: dict[int, Bid]) -> dict:
    winners = []
    for w in outcome.winners:
        entry = {"id": w, "bid": format_money(bids[w].amount), "price": format_money(outcome.prices[w])}
        if outcome.positions is not None:
            entry["position"] = outcome.positions[w]
        winners.append(entry)
    return {
        "mechanism": outcome.mechanism,
        "k": outcome.allocation.k,
        "winners": winners,
        "efficiency": format_money(outcome.efficiency),
        "revenue": format_money(outcome.revenue),
    }


def dump_json(data, path: Optional[Union[str, Path]] = None) -> str:
    text = json.dumps(data, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
