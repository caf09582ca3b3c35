"""Per-device binary energy-state traces.

A trace records, for every slot t = 1..T of a period, whether the device
could harvest a usable unit of energy (b(t) = 1) or not (b(t) = 0). Traces
are either synthesized from a seeded Bernoulli arrival process or derived
from raw power readings by thresholding.

Randomness uses the counter-based Philox generator keyed through
numpy.random.SeedSequence, so identical (seed, device_id) always reproduce
identical traces on any platform. Each device of a pair gets an independent
sub-stream derived from (seed, device_id).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

# Seed used by the CLI whenever the caller does not pass one. Fixed, never
# wall-clock derived, so default runs are reproducible.
DEFAULT_SEED = 1729


class TraceFormatError(ValueError):
    """Malformed trace data; the message names the offending row."""


def _stream(seed: int, *tags: int) -> np.random.Generator:
    """Philox stream for (seed, tags); tags separate sub-streams."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(t) for t in tags))
    return np.random.Generator(np.random.Philox(ss))


def device_stream(seed: int, device_id: str, purpose: int = 0) -> np.random.Generator:
    """Independent Philox sub-stream derived from (seed, device_id).

    `purpose` separates different uses of the same device identity, e.g.
    trace generation vs. online activation draws.
    """
    tag = int.from_bytes(device_id.encode("utf-8"), "big") if device_id else 0
    ss = np.random.SeedSequence(entropy=(int(seed), tag), spawn_key=(int(purpose),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class EnergyTrace:
    """Binary energy states b(t) for one device over slots 1..period_len."""

    device_id: str
    states: tuple[int, ...]
    period_len: int

    def __post_init__(self) -> None:
        if self.period_len < 0:
            raise ValueError(f"period_len must be non-negative, got {self.period_len}")
        if len(self.states) != self.period_len:
            raise ValueError(
                f"states length {len(self.states)} does not match period_len {self.period_len}"
            )
        if any(s not in (0, 1) for s in self.states):
            raise ValueError("every energy state must be exactly 0 or 1")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.states, dtype=np.uint8)

    def harvest_slots(self) -> tuple[int, ...]:
        """1-based slots where the device can harvest."""
        return tuple(t + 1 for t, s in enumerate(self.states) if s == 1)


@dataclass(frozen=True)
class ArrivalModel:
    """I.i.d. Bernoulli arrivals: b(t) = 1 with probability prob_harvest."""

    prob_harvest: float
    period_len: int
    seed: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.prob_harvest <= 1.0):
            raise ValueError(f"prob_harvest must lie in [0, 1], got {self.prob_harvest}")
        if self.period_len < 1:
            raise ValueError(f"period_len must be at least 1, got {self.period_len}")


@dataclass(frozen=True)
class RawTrace:
    """Raw power/voltage samples (slot, reading) for one device."""

    device_id: str
    samples: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        prev = 0
        for i, (slot, reading) in enumerate(self.samples):
            if slot <= prev:
                raise TraceFormatError(
                    f"sample row {i + 1} of device {self.device_id!r}: slot {slot} "
                    f"not strictly increasing (previous was {prev})"
                )
            if not math.isfinite(reading) or reading < 0.0:
                raise TraceFormatError(
                    f"sample row {i + 1} of device {self.device_id!r}: reading "
                    f"{reading!r} must be finite and non-negative"
                )
            prev = slot


def generate_trace(model: ArrivalModel, device_id: str = "u") -> EnergyTrace:
    """Draw one seeded Bernoulli trace; pure function of (model, device_id)."""
    rng = device_stream(model.seed, device_id, purpose=0)
    states = (rng.random(model.period_len) < model.prob_harvest).astype(np.uint8)
    return EnergyTrace(
        device_id=device_id,
        states=tuple(states.tolist()),
        period_len=model.period_len,
    )


def generate_pair(
    model: ArrivalModel, id_u: str = "u", id_v: str = "v"
) -> tuple[EnergyTrace, EnergyTrace]:
    """Generate both devices of a pair from independent sub-streams."""
    return generate_trace(model, id_u), generate_trace(model, id_v)


def threshold_trace(raw: RawTrace, threshold: float, period_len: int) -> EnergyTrace:
    """Binarize raw readings: b(t) = 1 iff a sample at slot t reads >= threshold.

    The comparison is inclusive and slots without a sample map to 0 (no
    evidence of harvestable energy).
    """
    if threshold <= 0.0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if period_len < 1:
        raise ValueError(f"period_len must be at least 1, got {period_len}")
    states = [0] * period_len
    for i, (slot, reading) in enumerate(raw.samples):
        if not (1 <= slot <= period_len):
            raise TraceFormatError(
                f"sample row {i + 1} of device {raw.device_id!r}: slot {slot} "
                f"outside 1..{period_len}"
            )
        if reading >= threshold:
            states[slot - 1] = 1
    return EnergyTrace(device_id=raw.device_id, states=tuple(states), period_len=period_len)


def estimate_prob(trace: EnergyTrace) -> float:
    """Empirical harvest probability: fraction of slots with b = 1."""
    if trace.period_len < 1:
        raise ValueError("cannot estimate a probability from an empty trace")
    return sum(trace.states) / trace.period_len


# ---------------------------------------------------------------------------
# CSV interchange
#
# Raw traces:    header "slot,device_id,reading", one row per sample.
# Binary pairs:  header "slot,b_u,b_v", states written as literal 0/1 so a
#                write/read round trip is bit exact.
# ---------------------------------------------------------------------------

RAW_HEADER = ["slot", "device_id", "reading"]
PAIR_HEADER = ["slot", "b_u", "b_v"]


def write_raw_csv(traces: list[RawTrace], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_HEADER)
        for raw in traces:
            for slot, reading in raw.samples:
                writer.writerow([slot, raw.device_id, repr(float(reading))])


def read_raw_csv(path) -> dict[str, RawTrace]:
    """Read raw samples grouped by device; errors name the offending row."""
    by_device: dict[str, list[tuple[int, float]]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RAW_HEADER:
            raise TraceFormatError(
                f"{path}: row 1: expected header {','.join(RAW_HEADER)!r}, got {header!r}"
            )
        for row_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise TraceFormatError(f"{path}: row {row_no}: expected 3 fields, got {len(row)}")
            try:
                slot = int(row[0])
                reading = float(row[2])
            except ValueError as exc:
                raise TraceFormatError(f"{path}: row {row_no}: {exc}") from exc
            by_device.setdefault(row[1], []).append((slot, reading))
    return {dev: RawTrace(device_id=dev, samples=tuple(samples)) for dev, samples in by_device.items()}


def write_pair_csv(trace_u: EnergyTrace, trace_v: EnergyTrace, path) -> None:
    if trace_u.period_len != trace_v.period_len:
        raise ValueError(
            f"pair traces disagree on period length: {trace_u.period_len} vs {trace_v.period_len}"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PAIR_HEADER)
        for t in range(trace_u.period_len):
            writer.writerow([t + 1, trace_u.states[t], trace_v.states[t]])


def read_pair_csv(path, id_u: str = "u", id_v: str = "v") -> tuple[EnergyTrace, EnergyTrace]:
    """Read a two-device binary trace; errors name the offending row."""
    states_u: list[int] = []
    states_v: list[int] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PAIR_HEADER:
            raise TraceFormatError(
                f"{path}: row 1: expected header {','.join(PAIR_HEADER)!r}, got {header!r}"
            )
        for row_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise TraceFormatError(f"{path}: row {row_no}: expected 3 fields, got {len(row)}")
            try:
                slot = int(row[0])
            except ValueError as exc:
                raise TraceFormatError(f"{path}: row {row_no}: bad slot {row[0]!r}") from exc
            if slot != row_no - 1:
                raise TraceFormatError(
                    f"{path}: row {row_no}: expected slot {row_no - 1}, got {slot}"
                )
            for col, val in (("b_u", row[1]), ("b_v", row[2])):
                if val not in ("0", "1"):
                    raise TraceFormatError(
                        f"{path}: row {row_no}: column {col} must be 0 or 1, got {val!r}"
                    )
            states_u.append(int(row[1]))
            states_v.append(int(row[2]))
    period = len(states_u)
    return (
        EnergyTrace(device_id=id_u, states=tuple(states_u), period_len=period),
        EnergyTrace(device_id=id_v, states=tuple(states_v), period_len=period),
    )
