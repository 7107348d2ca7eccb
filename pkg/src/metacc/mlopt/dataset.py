"""Training dataset CSV: PKI features followed by per-backend times."""

from __future__ import annotations

import csv
import io
import random
from pathlib import Path

from .features import FeatureVector, check_schema, schema_hash

TIME_PREFIX = "time_"


def read_dataset(path_or_text, is_text: bool = False):
    """Returns (schema, [(FeatureVector, {backend: ns}), ...])."""
    text = path_or_text if is_text else Path(path_or_text).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0] or rows[0][0] != "loop_id":
        raise ValueError("dataset must start with a loop_id header")
    header = rows[0]
    times_at = [i for i, h in enumerate(header) if h.startswith(TIME_PREFIX)]
    if not times_at or times_at != list(range(times_at[0], len(header))):
        raise ValueError("time_<backend> columns must follow the features")
    schema = check_schema(header[1:times_at[0]])
    backends = [header[i][len(TIME_PREFIX):] for i in times_at]
    h = schema_hash(schema)
    out = []
    for n, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"dataset line {n}: expected {len(header)} fields")
        values = tuple(float(v) for v in row[1:times_at[0]])
        if any(v < 0 for v in values):
            raise ValueError(f"dataset line {n}: negative feature")
        times = {b: int(row[i]) for b, i in zip(backends, times_at) if row[i].strip()}
        out.append((FeatureVector(row[0], values, h), times))
    return schema, out


def format_dataset(schema, rows, backends) -> str:
    lines = [",".join(["loop_id", *schema, *(TIME_PREFIX + b for b in backends)])]
    for fv, times in rows:
        vals = [repr(float(v)) for v in fv.values]
        lines.append(",".join([fv.loop_id, *vals, *(str(times[b]) if b in times else "" for b in backends)]))
    return "\n".join(lines) + "\n"


def synthetic_dataset(n: int, seed: int, n_features: int = 10, backends=("icc", "polly"), schema=None):
    """Two well separated clusters; each cluster's backend is the fastest for its loops."""
    rng = random.Random(f"metacc-synthetic:{seed}")
    schema = tuple(schema) if schema else tuple(f"ev{i:02d}" for i in range(n_features))
    h = schema_hash(schema)
    centers = (2.0, 4.0)
    rows = []
    for i in range(n):
        c = i % 2
        values = tuple(round(max(0.0, rng.gauss(centers[c], 1.0)), 6) for _ in schema)
        base = rng.randrange(50_000, 150_000)
        times = {b: base + (0 if j == c else rng.randrange(5_000, 40_000)) for j, b in enumerate(backends)}
        rows.append((FeatureVector(f"S{seed}_{i:03d}", values, h), times))
    return schema, rows
