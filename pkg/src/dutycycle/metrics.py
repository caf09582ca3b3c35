"""Pair metrics: CAT, SAT, heterogeneity and online/offline ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import Schedule
from .offline import OfflineResult
from .online import OnlineResult
from .traces import EnergyTrace, estimate_prob


@dataclass(frozen=True)
class PairMetrics:
    """One row of per-pair reporting."""

    pair_id: str
    cat: float
    sat: float
    cat_pct: float
    sat_pct: float
    heterogeneity: float
    p_hat_u: float
    p_hat_v: float

    CSV_HEADER = "pair_id,cat,sat,cat_pct,sat_pct,heterogeneity,p_hat_u,p_hat_v"

    def to_csv_row(self) -> str:
        return ",".join(
            [
                self.pair_id,
                repr(self.cat),
                repr(self.sat),
                repr(self.cat_pct),
                repr(self.sat_pct),
                repr(self.heterogeneity),
                repr(self.p_hat_u),
                repr(self.p_hat_v),
            ]
        )

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "cat": self.cat,
            "sat": self.sat,
            "cat_pct": self.cat_pct,
            "sat_pct": self.sat_pct,
            "heterogeneity": self.heterogeneity,
            "p_hat_u": self.p_hat_u,
            "p_hat_v": self.p_hat_v,
        }


def compute_cat(schedule: Schedule) -> float:
    """Total CAT of a schedule: correctly rounded sum of the per-slot values."""
    return math.fsum(schedule.cat)


def compute_sat(schedule: Schedule) -> float:
    """Synchronous part of the CAT: the weight-1 slots only."""
    return math.fsum(c for c in schedule.cat if c == 1.0)


def compute_heterogeneity(trace_u: EnergyTrace, trace_v: EnergyTrace) -> float:
    """Degree of non-overlap of the harvest-slot sets.

    1 - |intersection| / |union| over the two devices' harvest slots; 0 for
    identical access (or when neither device ever harvests), 1 for disjoint
    access.
    """
    if trace_u.period_len != trace_v.period_len:
        raise ValueError(
            f"traces disagree on period length: {trace_u.period_len} vs {trace_v.period_len}"
        )
    slots_u = set(trace_u.harvest_slots())
    slots_v = set(trace_v.harvest_slots())
    union = slots_u | slots_v
    if not union:
        return 0.0
    return 1.0 - len(slots_u & slots_v) / len(union)


def ratio_online_to_offline(online: OnlineResult, offline: OfflineResult) -> float:
    """online CAT / offline CAT for the same trace pair; 1 when both are 0."""
    if offline.cat_total == 0.0:
        return 1.0 if online.cat_total == 0.0 else math.inf
    return online.cat_total / offline.cat_total


def pair_metrics(
    pair_id: str,
    trace_u: EnergyTrace,
    trace_v: EnergyTrace,
    cat: float,
    sat: float,
) -> PairMetrics:
    """Assemble one report row from traces and a run's totals."""
    period = trace_u.period_len
    return PairMetrics(
        pair_id=pair_id,
        cat=cat,
        sat=sat,
        cat_pct=cat / period if period else 0.0,
        sat_pct=sat / period if period else 0.0,
        heterogeneity=compute_heterogeneity(trace_u, trace_v),
        p_hat_u=estimate_prob(trace_u),
        p_hat_v=estimate_prob(trace_v),
    )
