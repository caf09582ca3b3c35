"""Exhaustive maximum-weight matching oracle for small instances.

Deliberately dumb certification tool: it considers every vertex-exclusive
matching of the energy-state graph (same-slot edges weight 1, cross-slot
weight eta) via layered enumeration over U-vertex assignments, with no
greedy shortcuts shared with the production scheduler. Sizes are capped so
the search stays cheap; anything larger is refused rather than approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .graph import Edge, Matching, StateGraph

# Upper bound on |set_a| and |set_b| for the exhaustive search. 12 keeps the
# layered enumeration under ~0.6M states, enough for period-12 certification
# runs at high harvest probabilities.
ORACLE_MAX_VERTEXES = 12


class OracleBudgetError(ValueError):
    """Instance exceeds the exhaustive-search size budget."""


@dataclass(frozen=True)
class OracleResult:
    best_weight: float
    best_sync_count: int
    best_async_count: int
    witness: Matching


def _eta_as_fraction(eta: float) -> Fraction:
    frac = Fraction(eta).limit_denominator(1000)
    if abs(float(frac) - eta) > 1e-9:
        raise ValueError(
            f"eta {eta!r} is not representable as a small ratio; "
            "the oracle needs exact integer weights for tie-breaking"
        )
    return frac


def brute_force_matching(graph: StateGraph) -> OracleResult:
    """Search every matching; maximize weight, then synchronous edge count.

    Enumeration recurses over U-vertexes in ascending order; each is either
    left unmatched or paired with any still-free V-vertex. States reached by
    several partial matchings are merged by keeping the best score, which
    preserves exhaustiveness. Weights are compared in exact integer
    arithmetic (eta as a rational) so ties break deterministically.
    """
    A = list(graph.set_a)
    B = list(graph.set_b)
    na, nb = len(A), len(B)
    if na > ORACLE_MAX_VERTEXES or nb > ORACLE_MAX_VERTEXES:
        raise OracleBudgetError(
            f"instance has {na}x{nb} vertexes; exhaustive search is capped at "
            f"{ORACLE_MAX_VERTEXES}x{ORACLE_MAX_VERTEXES}"
        )
    frac = _eta_as_fraction(graph.eta)
    w_sync = frac.denominator  # weight 1 in eta-denominator units
    w_async = frac.numerator

    # score = weight_units * 16 + sync_count; weight differences are whole
    # units so the +sync term (at most 12) can never flip the weight order.
    full = 1 << nb
    layers = [[-1] * full for _ in range(na + 1)]
    layers[0][0] = 0
    for i in range(na):
        cur = layers[i]
        nxt = layers[i + 1]
        u = A[i]
        for mask in range(full):
            base = cur[mask]
            if base < 0:
                continue
            if base > nxt[mask]:  # leave u unmatched
                nxt[mask] = base
            for j in range(nb):
                bit = 1 << j
                if mask & bit:
                    continue
                if B[j] == u:
                    cand = base + w_sync * 16 + 1
                else:
                    cand = base + w_async * 16
                nm = mask | bit
                if cand > nxt[nm]:
                    nxt[nm] = cand

    final = layers[na]
    best = max(final)
    best_mask = final.index(best)  # lowest mask among ties

    # Backtrack one witness; among equal-score predecessors prefer leaving u
    # unmatched, then the lowest V index, which makes the witness stable.
    edges: list[Edge] = []
    mask = best_mask
    score = best
    for i in range(na - 1, -1, -1):
        cur = layers[i]
        u = A[i]
        if cur[mask] == score:
            continue
        found = False
        for j in range(nb):
            bit = 1 << j
            if not (mask & bit):
                continue
            gain = w_sync * 16 + 1 if B[j] == u else w_async * 16
            prev = mask ^ bit
            if cur[prev] == score - gain:
                edges.append(Edge(u, B[j]))
                mask = prev
                score -= gain
                found = True
                break
        if not found:  # pragma: no cover - DP bookkeeping guarantees a path
            raise AssertionError("witness backtrack failed")

    witness = Matching(edges=tuple(edges))
    sync_count = witness.sync_count
    async_count = witness.async_count
    best_weight = math.fsum([1.0] * sync_count + [graph.eta] * async_count)
    return OracleResult(
        best_weight=best_weight,
        best_sync_count=sync_count,
        best_async_count=async_count,
        witness=witness,
    )


def closed_form_optimum(n_sync: int, n_a_only: int, n_b_only: int, eta: float) -> float:
    """Fast upper-bound cross-check: n_sync + eta * min(n_a_only, n_b_only).

    Assumes every leftover vertex can find a cross partner, which ignores
    ordering corner cases, so use it as a bound rather than ground truth.
    """
    if min(n_sync, n_a_only, n_b_only) < 0:
        raise ValueError("counts must be non-negative")
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    return n_sync + eta * min(n_a_only, n_b_only)
