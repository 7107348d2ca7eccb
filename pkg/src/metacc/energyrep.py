"""Energy runs under a marker-aware tool and the per-loop energy CSV."""

from __future__ import annotations

import logging
import re
import shlex
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .backends import expand
from .profiler import RUN_LOCK
from .runner import Runner, SubprocessRunner

log = logging.getLogger(__name__)

DEFAULT_TOOL = "likwid-perfctr -C 0 -g ENERGY -m -o {out} {exe} {args}"
CSV_HEADER = "loop_id,backend,pkg_energy_J,dram_energy_J,elapsed_s,avg_power_W"
PKG_KEY, DRAM_KEY, TIME_KEY = "Energy [J]", "Energy DRAM [J]", "Runtime (RDTSC) [s]"

_REGION = re.compile(r"^Region\s+([^,\s]+)")
_ROW = re.compile(r"^\|\s*([^|]*?)\s*\|\s*([^|]*?)\s*\|")


class ToolUnavailable(RuntimeError):
    pass


class ParseFailure(ValueError):
    pass


@dataclass(frozen=True)
class EnergyRecord:
    loop_id: str
    backend: str
    pkg_energy_J: float
    dram_energy_J: float
    elapsed_s: float
    avg_power_W: float
    zero_elapsed: bool = False

    @classmethod
    def derive(cls, loop_id, backend, pkg, dram, elapsed) -> "EnergyRecord":
        if pkg < 0 or dram < 0 or elapsed < 0:
            raise ValueError(f"{loop_id}: negative energy or time")
        if elapsed > 0:
            return cls(loop_id, backend, pkg, dram, elapsed, (pkg + dram) / elapsed)
        return cls(loop_id, backend, pkg, dram, elapsed, 0.0, True)


def parse_region_output(text: str) -> dict[str, dict[str, float]]:
    """Region name -> {metric: value} from a likwid-style marker report."""
    regions: dict[str, dict[str, float]] = {}
    current = None
    for line in text.splitlines():
        m = _REGION.match(line)
        if m:
            current = regions.setdefault(m.group(1), {})
            continue
        m = _ROW.match(line.strip())
        if current is None or not m or m.group(1) not in (PKG_KEY, DRAM_KEY, TIME_KEY):
            continue
        try:
            current[m.group(1)] = float(m.group(2))
        except ValueError:
            raise ParseFailure(f"bad value {m.group(2)!r} for {m.group(1)}") from None
    if not regions:
        raise ParseFailure("no marker regions in tool output")
    return regions


def records_from_output(text: str, backend: str) -> list[EnergyRecord]:
    out = []
    for name, metrics in parse_region_output(text).items():
        missing = [k for k in (PKG_KEY, DRAM_KEY, TIME_KEY) if k not in metrics]
        if missing:
            log.warning("%s/%s: region lacks %s; skipped", backend, name, ", ".join(missing))
            continue
        rec = EnergyRecord.derive(name, backend, metrics[PKG_KEY], metrics[DRAM_KEY], metrics[TIME_KEY])
        if rec.zero_elapsed:
            log.warning("%s/%s: zero elapsed time; power reported as 0", backend, name)
        out.append(rec)
    return out


def run_energy_profile(executables: dict, tool_template: str | None, input_args: str = "",
                       runner: Runner | None = None, workdir=None) -> list[EnergyRecord]:
    """One tool run per backend executable, sequentially."""
    tool_template = tool_template or DEFAULT_TOOL
    runner = runner or SubprocessRunner()
    records = []
    with tempfile.TemporaryDirectory(dir=workdir, prefix="mcenergy-") as tmp:
        for backend in sorted(executables):
            out = Path(tmp) / f"{backend.replace(':', '_')}.txt"
            argv = expand(tool_template, exe=str(executables[backend]),
                          args=shlex.split(input_args or ""), out=str(out))
            if not runner.available(argv[0]):
                raise ToolUnavailable(f"energy tool {argv[0]} not found; set %energy_tool in the "
                                      "backend config")
            with RUN_LOCK:
                p = runner.run(argv)
            if p.returncode != 0:
                log.warning("%s: energy run failed (%d); rows omitted", backend, p.returncode)
                continue
            try:
                records += records_from_output(out.read_text() if out.exists() else "", backend)
            except ParseFailure as exc:
                log.warning("%s: %s; rows omitted", backend, exc)
    return records


def format_energy_csv(records) -> str:
    rows = [CSV_HEADER]
    for r in sorted(records, key=lambda r: (r.loop_id, r.backend)):
        rows.append(f"{r.loop_id},{r.backend},{r.pkg_energy_J!r},{r.dram_energy_J!r},"
                    f"{r.elapsed_s!r},{r.avg_power_W!r}")
    return "\n".join(rows) + "\n"


def emit_energy_csv(records, path) -> Path:
    path = Path(path)
    path.write_text(format_energy_csv(records))
    return path
