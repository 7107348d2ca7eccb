"""Stand-ins for the external counter provider and energy tool.

Both run the instrumented program with $MC_MARKER_LOG set, read the region
trace it leaves behind and write output in the format the real tool would:

    python3 -m metacc.fakes counters [--fixture CSV] --out OUT -- EXE [ARGS...]
    python3 -m metacc.fakes energy --out OUT -- EXE [ARGS...]

Counts and energies are deterministic functions of the loop id and its
traced elapsed time.
"""

from __future__ import annotations

import argparse
import os
import shlex
import shutil
import subprocess
import sys
import tempfile
import zlib
from pathlib import Path

EVENTS = (
    "cycles", "l1d_miss", "l2_miss", "l3_miss", "dtlb_miss", "branch_miss",
    "fp_scalar", "fp_vector", "loads", "stores", "stall_mem", "stall_fe",
)
PKG_WATTS = (18.0, 42.0)
DRAM_WATTS = (2.0, 9.0)


def parse_trace(text: str) -> dict[str, int]:
    """Total traced ns per region, in first-seen order; unmatched STARTs are dropped."""
    open_at: dict[str, int] = {}
    totals: dict[str, int] = {}
    for line in text.splitlines():
        parts = line.split("\t")
        if len(parts) == 3 and parts[0] == "START":
            open_at[parts[1]] = int(parts[2])
        elif len(parts) == 3 and parts[0] == "STOP" and parts[1] in open_at:
            totals[parts[1]] = totals.get(parts[1], 0) + int(parts[2]) - open_at.pop(parts[1])
    return totals


def _unit(key: str) -> float:
    return (zlib.crc32(key.encode()) % 10_000) / 10_000


def counter_rows(totals: dict[str, int]) -> str:
    lines = ["loop_id,event,count"]
    for loop_id, ns in totals.items():
        inst = 2 * ns + 1000
        lines.append(f"{loop_id},inst_retired,{inst}")
        for ev in EVENTS:
            lines.append(f"{loop_id},{ev},{int(inst * _unit(loop_id + ':' + ev) * 0.2)}")
    return "\n".join(lines) + "\n"


def region_report(totals: dict[str, int]) -> str:
    out = []
    for loop_id, ns in totals.items():
        secs = ns / 1e9
        u = _unit(loop_id)
        pkg = round(secs * (PKG_WATTS[0] + u * (PKG_WATTS[1] - PKG_WATTS[0])), 12)
        dram = round(secs * (DRAM_WATTS[0] + u * (DRAM_WATTS[1] - DRAM_WATTS[0])), 12)
        out += [
            f"Region {loop_id}, Group 1: ENERGY",
            "+---------------------+------------+",
            "|        Metric       | HWThread 0 |",
            "+---------------------+------------+",
            f"| Runtime (RDTSC) [s] | {secs!r} |",
            f"|      Energy [J]     | {pkg!r} |",
            f"|   Energy DRAM [J]   | {dram!r} |",
            "+---------------------+------------+",
            "",
        ]
    return "\n".join(out)


def _run_traced(cmd: list[str]) -> tuple[int, dict[str, int]]:
    with tempfile.TemporaryDirectory(prefix="mcfake-") as tmp:
        log = Path(tmp) / "markers.log"
        p = subprocess.run(cmd, env={**os.environ, "MC_MARKER_LOG": str(log)}, check=False)
        return p.returncode, parse_trace(log.read_text() if log.exists() else "")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="metacc.fakes")
    ap.add_argument("tool", choices=("counters", "energy"))
    ap.add_argument("--out", required=True)
    ap.add_argument("--fixture", help="counters: copy this CSV instead of deriving one")
    argv = sys.argv[1:] if argv is None else list(argv)
    cut = argv.index("--") if "--" in argv else len(argv)
    args = ap.parse_args(argv[:cut])
    cmd = argv[cut + 1:]
    if not cmd:
        ap.error("missing program to run")
    code, totals = _run_traced(cmd)
    if code != 0:
        print(f"metacc.fakes: program exited with {code}", file=sys.stderr)
        return code
    if args.tool == "counters":
        if args.fixture:
            shutil.copyfile(args.fixture, args.out)
        else:
            Path(args.out).write_text(counter_rows(totals))
    else:
        Path(args.out).write_text(region_report(totals))
    return 0


def counter_template(fixture=None) -> str:
    extra = f" --fixture {shlex.quote(str(fixture))}" if fixture else ""
    return f"{shlex.quote(sys.executable)} -m metacc.fakes counters{extra} --out {{out_csv}} -- {{exe}} {{args}}"


def energy_template() -> str:
    return f"{shlex.quote(sys.executable)} -m metacc.fakes energy --out {{out}} -- {{exe}} {{args}}"


if __name__ == "__main__":
    sys.exit(main())
