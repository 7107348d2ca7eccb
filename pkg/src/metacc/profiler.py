"""Profiled runs, timing-record ingestion, medians, and hardware counter collection."""

from __future__ import annotations

import csv
import io
import logging
import shlex
import tempfile
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .backends import expand
from .runner import Runner, SubprocessRunner

log = logging.getLogger(__name__)

RECORD_TAG = "MC"
INSTRUCTIONS = "inst_retired"
COUNTER_HEADER = ("loop_id", "event", "count")
WHOLE_PROGRAM = "*"

# profiled executions never overlap, whichever thread asks for them
RUN_LOCK = threading.Lock()


class RunFailed(RuntimeError):
    def __init__(self, message: str, returncode: int = 1, stderr: str = ""):
        super().__init__(message)
        self.returncode = returncode
        self.stderr = stderr


class EmptySamples(ValueError):
    pass


class ProviderUnavailable(RuntimeError):
    pass


def format_record(loop_id: str, elapsed_ns: int) -> str:
    return f"{RECORD_TAG}\t{loop_id}\t{elapsed_ns}\n"


def parse_records(text: str) -> tuple[dict[str, int], int]:
    """Sum the records of one run per loop.  Returns (totals, malformed line count)."""
    totals: dict[str, int] = defaultdict(int)
    bad = 0
    for line in text.splitlines():
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[0] != RECORD_TAG or not parts[1] or not parts[2].isdigit():
            bad += 1
            continue
        totals[parts[1]] += int(parts[2])
    return dict(totals), bad


@dataclass
class TimingTable:
    entries: dict = field(default_factory=dict)  # (loop_id, backend) -> [per-run total ns]
    runs: int = 0
    malformed: int = 0

    def add_run(self, backend: str, totals: dict[str, int]) -> None:
        for loop_id, ns in totals.items():
            self.entries.setdefault((loop_id, backend), []).append(ns)

    def merge(self, other: "TimingTable") -> "TimingTable":
        for key, samples in other.entries.items():
            self.entries.setdefault(key, []).extend(samples)
        self.runs = max(self.runs, other.runs)
        self.malformed += other.malformed
        return self

    def backends(self) -> list[str]:
        return sorted({b for _, b in self.entries})

    def loops(self) -> list[str]:
        return sorted({lp for lp, _ in self.entries})

    def medians(self, loop_id: str) -> dict[str, int]:
        return {b: median_ns(s) for (lp, b), s in self.entries.items() if lp == loop_id and s}

    def dump(self) -> str:
        """Tab-separated dump: loop, backend, median, per-run totals."""
        lines = ["loop_id\tbackend\tmedian_ns\truns_ns"]
        for (lp, b) in sorted(self.entries):
            s = self.entries[(lp, b)]
            lines.append(f"{lp}\t{b}\t{median_ns(s)}\t{','.join(map(str, s))}")
        return "\n".join(lines) + "\n"


def median_ns(samples) -> int:
    """Median; for an even count the lower-middle sample."""
    if not samples:
        raise EmptySamples("no samples")
    s = sorted(samples)
    return s[(len(s) - 1) // 2]


def run_profiled(executable, input_args: str, runs: int, backend: str,
                 runner: Runner | None = None, workdir=None, timeout: float | None = None) -> TimingTable:
    """Run a timed executable ``runs`` times, one at a time, each with a fresh record file."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    runner = runner or SubprocessRunner()
    argv = [str(executable)] + shlex.split(input_args or "")
    table = TimingTable(runs=runs)
    with tempfile.TemporaryDirectory(dir=workdir, prefix="mcprof-") as tmp:
        for i in range(runs):
            out = Path(tmp) / f"{backend.replace(':', '_')}-{i}.mcprof"
            with RUN_LOCK:
                p = runner.run(argv, env={"MC_PROFILE_OUT": str(out)}, timeout=timeout)
            if p.returncode != 0:
                raise RunFailed(f"{executable} exited with {p.returncode}", p.returncode, p.stderr)
            text = out.read_text() if out.exists() else ""
            totals, bad = parse_records(text)
            if bad:
                log.warning("%s run %d: skipped %d malformed record(s)", backend, i + 1, bad)
            table.malformed += bad
            table.add_run(backend, totals)
    return table


@dataclass
class CounterSet:
    loop_id: str
    counters: dict = field(default_factory=dict)
    instructions: int = 0


def parse_counter_csv(text: str) -> list[CounterSet]:
    """Counter interchange CSV -> one CounterSet per loop, in first-seen order."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != COUNTER_HEADER:
        raise ValueError(f"counter CSV must start with {','.join(COUNTER_HEADER)}")
    sets: dict[str, CounterSet] = {}
    for n, row in enumerate(rows[1:], 2):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ValueError(f"counter CSV line {n}: expected 3 fields")
        loop_id, event, count = (c.strip() for c in row)
        try:
            value = int(count)
        except ValueError:
            value = -1
        if value < 0:
            raise ValueError(f"counter CSV line {n}: bad count {count!r}")
        cs = sets.setdefault(loop_id, CounterSet(loop_id))
        if event == INSTRUCTIONS:
            cs.instructions = value
        else:
            cs.counters[event] = value
    return list(sets.values())


def format_counter_csv(sets) -> str:
    out = [",".join(COUNTER_HEADER)]
    for cs in sets:
        out.append(f"{cs.loop_id},{INSTRUCTIONS},{cs.instructions}")
        out.extend(f"{cs.loop_id},{ev},{n}" for ev, n in cs.counters.items())
    return "\n".join(out) + "\n"


def collect_counters(baseline_executable, input_args: str, provider_template: str | None,
                     runner: Runner | None = None, workdir=None,
                     out_csv=None) -> list[CounterSet]:
    """Run the -O1 baseline under the counter provider and read its per-loop CSV."""
    if not provider_template:
        raise ProviderUnavailable("no counter provider configured; use profiling-based search instead")
    runner = runner or SubprocessRunner()
    with tempfile.TemporaryDirectory(dir=workdir, prefix="mcctr-") as tmp:
        csv_path = Path(out_csv) if out_csv else Path(tmp) / "counters.csv"
        argv = expand(provider_template, exe=str(baseline_executable),
                      args=shlex.split(input_args or ""), out_csv=str(csv_path))
        if not runner.available(argv[0]):
            raise ProviderUnavailable(f"counter provider {argv[0]} not found; "
                                      "use profiling-based search instead")
        with RUN_LOCK:
            p = runner.run(argv)
        if p.returncode != 0:
            raise RunFailed(f"counter provider exited with {p.returncode}", p.returncode, p.stderr)
        if not csv_path.exists():
            raise ProviderUnavailable(f"counter provider wrote no {csv_path.name}")
        sets = parse_counter_csv(csv_path.read_text())
    if sets and all(cs.loop_id == WHOLE_PROGRAM for cs in sets):
        raise ProviderUnavailable("counter provider reports whole-program counts only; "
                                  "per-loop regions are required for prediction")
    return [cs for cs in sets if cs.loop_id != WHOLE_PROGRAM]
