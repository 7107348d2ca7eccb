"""PKI feature vectors and training labels."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from fractions import Fraction

from ..profiler import INSTRUCTIONS, CounterSet

log = logging.getLogger(__name__)

SERIAL_TARGETS = frozenset({"clang", "gcc", "icc", "polly"})
PARALLEL_TARGETS = frozenset({"icc", "polly"})
TARGETS = {"serial": SERIAL_TARGETS, "parallel": PARALLEL_TARGETS}


class ZeroInstructions(ValueError):
    pass


class SchemaMismatch(ValueError):
    pass


class NoAllowedTarget(ValueError):
    pass


def check_schema(schema) -> tuple[str, ...]:
    schema = tuple(schema)
    if INSTRUCTIONS in schema:
        raise ValueError(f"{INSTRUCTIONS} is the normalizer, not a feature")
    for ev in schema:
        if not ev or any(c.isspace() or c == "," for c in ev):
            raise ValueError(f"bad event name {ev!r}")
    if len(set(schema)) != len(schema):
        raise ValueError("duplicate event names in schema")
    return schema


def schema_hash(schema) -> str:
    return hashlib.sha256("\n".join(schema).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureVector:
    loop_id: str
    values: tuple
    schema_hash: str

    def floats(self) -> list[float]:
        return [float(v) for v in self.values]


def normalize_pki(raw: CounterSet, schema) -> FeatureVector:
    """Counts per thousand retired instructions, as exact fractions."""
    schema = check_schema(schema)
    if raw.instructions <= 0:
        raise ZeroInstructions(f"{raw.loop_id}: no retired instructions")
    missing = [ev for ev in schema if ev not in raw.counters]
    if missing:
        log.warning("%s: missing events %s taken as 0", raw.loop_id, ", ".join(missing))
    per_kilo = Fraction(raw.instructions, 1000)
    values = tuple(Fraction(raw.counters.get(ev, 0)) / per_kilo for ev in schema)
    return FeatureVector(raw.loop_id, values, schema_hash(schema))


@dataclass(frozen=True)
class TrainingInstance:
    features: FeatureVector
    per_backend_ns: dict
    label: str


def argmin_backend(times: dict, allowed=None) -> str | None:
    """Fastest backend; equal times go to the lexicographically first name."""
    names = sorted(b for b in times if allowed is None or b in allowed)
    if not names:
        return None
    return min(names, key=lambda b: (times[b], b))


def label_and_relabel(instances, allowed_targets) -> list[TrainingInstance]:
    """Label each instance with its fastest backend, falling back to the fastest allowed one."""
    allowed = frozenset(allowed_targets)
    out = []
    for features, times in instances:
        if not times:
            raise ValueError(f"{features.loop_id}: no timings")
        label = argmin_backend(times)
        if label not in allowed:
            label = argmin_backend(times, allowed)
            if label is None:
                raise NoAllowedTarget(f"{features.loop_id}: none of {sorted(allowed)} was timed")
        out.append(TrainingInstance(features, dict(times), label))
    return out
