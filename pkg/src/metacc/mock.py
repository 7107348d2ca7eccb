"""Deterministic mock toolchain.

A mock "object" is a one-line text stub naming the backend, the loop and
its synthetic timing profile.  The mock linker turns a list of stubs into a
small Python program that, when run, behaves like an instrumented binary:
it appends one timing record per loop execution to $MC_PROFILE_OUT and,
for energized builds, writes a marker trace to $MC_MARKER_LOG.
"""

from __future__ import annotations

import stat
import sys
import threading
from dataclasses import dataclass
from pathlib import Path

STUB_MAGIC = "MCMOCK"
ENERGY_DEFINES = ("-DMC_ENERGY_PERFMON", "-DLIKWID_PERFMON")

_ledger_lock = threading.Lock()


@dataclass(frozen=True)
class MockProfile:
    """Per-loop executions in ns; ``None`` means the loop never runs.

    Text form: ``L0=100,L1=40+60,L2=-,*=500,exit=0``.
    """

    times: tuple = ()
    fallback: tuple | None = (1000,)
    exit_code: int = 0

    @classmethod
    def parse(cls, text: str) -> "MockProfile":
        times, fallback, code = [], (1000,), 0
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, _, value = item.partition("=")
            if not _:
                raise ValueError(f"bad mock profile item {item!r}")
            if key == "exit":
                code = int(value)
                continue
            runs = None if value == "-" else tuple(int(v) for v in value.split("+"))
            if runs is not None and any(v < 0 for v in runs):
                raise ValueError(f"negative time in {item!r}")
            if key == "*":
                fallback = runs
            else:
                times.append((key, runs))
        return cls(tuple(times), fallback, code)

    def executions(self, loop_id: str) -> tuple | None:
        for key, runs in self.times:
            if key == loop_id:
                return runs
        return self.fallback

    def render(self) -> str:
        items = [f"{k}={'-' if v is None else '+'.join(map(str, v))}" for k, v in self.times]
        items.append(f"*={'-' if self.fallback is None else '+'.join(map(str, self.fallback))}")
        if self.exit_code:
            items.append(f"exit={self.exit_code}")
        return ",".join(items)


def compile_stub(backend: str, profile: MockProfile, mode: str, loop_id: str | None,
                 variant: str, flags, source: Path, obj: Path, ledger: Path | None) -> None:
    runs = profile.executions(loop_id) if loop_id else None
    timing = "-" if runs is None else "+".join(map(str, runs))
    energy = int(any(f in ENERGY_DEFINES for f in flags))
    obj.parent.mkdir(parents=True, exist_ok=True)
    obj.write_text(f"{STUB_MAGIC}\t{backend}\t{loop_id or '-'}\t{variant}\t{mode}\t{timing}\t"
                   f"energy={energy}\texit={profile.exit_code}\n")
    if ledger is not None:
        with _ledger_lock:
            with open(ledger, "a") as f:
                f.write(f"{backend}\t{mode}\t{variant}\t{loop_id or '-'}\t{source}\t{obj}\n")


def read_stub(path: Path) -> dict | None:
    try:
        line = Path(path).read_text().splitlines()[0]
    except (OSError, IndexError, UnicodeDecodeError):
        return None
    parts = line.split("\t")
    if len(parts) != 8 or parts[0] != STUB_MAGIC:
        return None
    runs = None if parts[5] == "-" else [int(v) for v in parts[5].split("+")]
    return {
        "backend": parts[1], "loop_id": None if parts[2] == "-" else parts[2],
        "variant": parts[3], "mode": parts[4], "runs": runs,
        "energy": parts[6] == "energy=1", "exit": int(parts[7].split("=")[1]),
    }


_PROGRAM = '''#!{python}
# {magic} executable: synthetic per-loop timings
import os
import sys

LOOPS = {loops!r}
EXIT = {exit_code!r}


def main():
    prof = os.environ.get("MC_PROFILE_OUT")
    marker = os.environ.get("MC_MARKER_LOG")
    clock = 1000000000
    trace = []
    timing = []
    for loop_id, backend, variant, runs, energy in LOOPS:
        for ns in runs or ():
            if variant == "timed":
                timing.append("MC\\t%s\\t%d\\n" % (loop_id, ns))
            if variant == "energized" and energy:
                if not trace:
                    trace.append("INIT\\t%d\\n" % clock)
                trace.append("START\\t%s\\t%d\\n" % (loop_id, clock))
                clock += ns
                trace.append("STOP\\t%s\\t%d\\n" % (loop_id, clock))
            clock += 1000
    if prof and timing:
        with open(prof, "a") as f:
            f.writelines(timing)
    if marker and trace:
        trace.append("CLOSE\\t%d\\n" % clock)
        with open(marker, "a") as f:
            f.writelines(trace)
    sys.stdout.write("mock program: %d loops, args=%s\\n" % (len(LOOPS), " ".join(sys.argv[1:])))
    return EXIT


if __name__ == "__main__":
    sys.exit(main())
'''


def link(objects, output: Path) -> None:
    """Write the mock executable for ``objects`` (non-stub files are ignored)."""
    loops = []
    exit_code = 0
    for obj in objects:
        stub = read_stub(obj)
        if stub is None:
            continue
        exit_code = exit_code or stub["exit"]
        if stub["loop_id"] is not None:
            loops.append((stub["loop_id"], stub["backend"], stub["variant"],
                          tuple(stub["runs"] or ()), stub["energy"]))
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(_PROGRAM.format(python=sys.executable, magic=STUB_MAGIC, loops=loops,
                                      exit_code=exit_code))
    output.chmod(output.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)


def is_mock_executable(path) -> bool:
    try:
        with open(path) as f:
            f.readline()
            return STUB_MAGIC in f.readline()
    except (OSError, UnicodeDecodeError):
        return False

