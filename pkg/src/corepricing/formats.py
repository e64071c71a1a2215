"""JSON formats for instances and outcomes.

Valuation profile::

    {"items": 2, "bidders": [{"id": 1, "bids": [{"bundle": [0], "value_micro": 60000000}]}]}

Slate instance::

    {"h": 4, "m": 20, "ads": [{"advertiser": 0, "decoration": 0, "lines": 3,
      "bid_micro": 1500000, "pclick_num": 37, "pclick_den": 1000}]}
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from corepricing.model import AuctionOutcome, Valuation, ValuationProfile
from corepricing.oracles import Ad, SlateInstance


def profile_from_json(data: dict) -> ValuationProfile:
    bidders = []
    for bidder in data["bidders"]:
        entries = tuple(
            (frozenset(bid["bundle"]), int(bid["value_micro"])) for bid in bidder["bids"]
        )
        bidders.append((int(bidder["id"]), Valuation(entries)))
    return ValuationProfile(tuple(bidders), int(data["items"]))


def profile_to_json(profile: ValuationProfile) -> dict:
    return {
        "items": profile.item_count,
        "bidders": [
            {
                "id": i,
                "bids": [
                    {"bundle": sorted(b), "value_micro": v} for b, v in valuation.entries
                ],
            }
            for i, valuation in profile.bidders
        ],
    }


def slate_from_json(data: dict) -> SlateInstance:
    ads = tuple(
        Ad(
            advertiser=int(ad["advertiser"]),
            decoration=int(ad["decoration"]),
            lines=int(ad["lines"]),
            bid=int(ad["bid_micro"]),
            pclick=Fraction(int(ad["pclick_num"]), int(ad["pclick_den"])),
        )
        for ad in data["ads"]
    )
    return SlateInstance(ads, int(data["h"]), int(data["m"]))


def slate_to_json(instance: SlateInstance) -> dict:
    return {
        "h": instance.max_ads,
        "m": instance.max_lines,
        "ads": [
            {
                "advertiser": ad.advertiser,
                "decoration": ad.decoration,
                "lines": ad.lines,
                "bid_micro": ad.bid,
                "pclick_num": ad.pclick.numerator,
                "pclick_den": ad.pclick.denominator,
            }
            for ad in instance.ads
        ],
    }


def instance_from_json(data: dict):
    if "ads" in data:
        return slate_from_json(data)
    if "bidders" in data:
        return profile_from_json(data)
    raise ValueError("unrecognised instance: expected 'ads' or 'bidders'")


def instance_to_json(instance) -> dict:
    if isinstance(instance, SlateInstance):
        return slate_to_json(instance)
    return profile_to_json(instance)


def load_instance(path) -> ValuationProfile | SlateInstance:
    return instance_from_json(json.loads(Path(path).read_text()))


def save_instance(instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(instance), indent=1) + "\n")


def _fraction(x: Fraction) -> str:
    return str(x)


def outcome_to_json(outcome: AuctionOutcome) -> dict:
    allocation = {}
    for i, x in sorted(outcome.allocation.items()):
        if isinstance(x, Ad):
            allocation[str(i)] = {"decoration": x.decoration, "lines": x.lines}
        else:
            allocation[str(i)] = sorted(x)
    out = {
        "mechanism": outcome.mechanism,
        "allocation": allocation,
        "values_micro": {str(i): v for i, v in sorted(outcome.values.items())},
        "payments_micro": {str(i): p for i, p in sorted(outcome.payments.items())},
        "revenue_micro": outcome.revenue,
        "welfare_micro": outcome.welfare,
        "oracle_calls": outcome.oracle_calls,
        "duration_s": outcome.duration_s,
    }
    if outcome.cpc is not None:
        out["cpc_micro"] = {str(i): _fraction(c) for i, c in sorted(outcome.cpc.items())}
        out["revenue_literal_micro"] = _fraction(outcome.revenue_literal())
    return out
