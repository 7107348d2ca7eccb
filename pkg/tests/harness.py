"""Compile-and-run oracle for extraction: original vs. outlined program output."""

from __future__ import annotations

import shutil
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from metacc.cparse.headers import scan_headers
from metacc.driver import data_dir
from metacc.extractor import extract_sources

FIXTURES = Path(__file__).resolve().parent / "fixtures"
CORPUS = FIXTURES / "corpus"
VARIANTS = ("clean", "timed", "energized")


def system_cc() -> str | None:
    for cc in ("gcc", "clang", "cc"):
        if shutil.which(cc):
            return cc
    return None


def corpus_programs() -> list[Path]:
    return sorted(CORPUS.glob("*.c"))


def expected_eligibility() -> dict[str, tuple[bool, list[str]]]:
    out = {}
    for line in (CORPUS / "expected.tsv").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        loop_id, eligible, reasons = (line.split("\t") + [""])[:3]
        out[loop_id] = (eligible == "yes", sorted(filter(None, reasons.split(","))))
    return out


def extract(src: Path, cc: str = "cc"):
    return extract_sources([src], lambda p: scan_headers(p, [cc, "-E"]))


def _build(cc, files, out, extra=()) -> str | None:
    p = subprocess.run([cc, "-O1", "-w", *extra, *map(str, files), "-o", str(out), "-lm"],
                       capture_output=True, text=True)
    return None if p.returncode == 0 else p.stderr[-2000:]


def _run(exe: Path, env=None) -> bytes:
    return subprocess.run([str(exe)], capture_output=True, env=env, timeout=60).stdout


def check_program(src: Path, cc: str, variants=VARIANTS) -> dict[str, str]:
    """Map variant -> "ok" or a failure description."""
    arts, results = extract(src, cc)
    out: dict[str, str] = {}
    with tempfile.TemporaryDirectory(prefix="mcharness-") as tmp:
        d = Path(tmp)
        err = _build(cc, [src], d / "orig")
        if err:
            return {v: f"original does not build: {err}" for v in variants}
        want = _run(d / "orig")
        (d / "base.c").write_text(arts.base_file[src])
        inc = ("-I", str(src.parent), "-I", str(data_dir()))
        for variant in variants:
            files = [d / "base.c"]
            for loop_id, lf in arts.loop_files.items():
                f = d / f"{loop_id}.{variant}.c"
                f.write_text(getattr(lf, variant))
                files.append(f)
            if variant == "timed":
                files.append(data_dir() / "mc_runtime.c")
            exe = d / f"ext_{variant}"
            err = _build(cc, files, exe, (*inc, "-pthread"))
            if err:
                out[variant] = f"build failed: {err}"
                continue
            got = _run(exe, {"MC_PROFILE_OUT": str(d / "records.txt")})
            out[variant] = "ok" if got == want else f"output differs: {want[:200]!r} vs {got[:200]!r}"
    return out


def check_corpus(cc: str, variants=VARIANTS, jobs: int = 8) -> dict[str, dict[str, str]]:
    progs = corpus_programs()
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        res = list(pool.map(lambda s: check_program(s, cc, variants), progs))
    return {p.name: r for p, r in zip(progs, res)}


def corpus_eligibility(cc: str = "cc") -> dict[str, tuple[bool, list[str]]]:
    got = {}
    for src in corpus_programs():
        _, results = extract(src, cc)
        for n in results[0].nests:
            got[n.loop_id] = (n.eligible, sorted(n.ineligibility_reasons))
    return got


# -- mock end-to-end helpers ---------------------------------------------

def config_with(base: Path, dest: Path, *lines: str) -> Path:
    """Copy a backend config and append directives."""
    dest.write_text(base.read_text() + "".join(f"{line}\n" for line in lines))
    return dest


def read_selection(path: Path) -> dict[str, tuple[str, str]]:
    rows = path.read_text().splitlines()[1:]
    return {r.split(",")[0]: tuple(r.split(",")[1:3]) for r in rows}


def run_mock_program(exe: Path, tmp: Path) -> dict[str, int]:
    """Run a mock executable and total its timing records per loop."""
    from metacc.profiler import parse_records

    rec = tmp / "composed.mcprof"
    rec.unlink(missing_ok=True)
    subprocess.run([str(exe)], env={"MC_PROFILE_OUT": str(rec), "PATH": "/usr/bin:/bin"},
                   check=True, capture_output=True)
    totals, bad = parse_records(rec.read_text())
    assert bad == 0
    return totals


def composed_timed_total(workdir: Path, selection: Path, default: str, tmp: Path) -> dict[str, int]:
    """Link each loop's chosen backend's timed object, as the final link would the clean
    one, and return the per-loop time the composed program reports."""
    from metacc import mock
    from metacc.synthesizer import Choice, SelectionPlan

    plan = SelectionPlan({lp: Choice(b, r) for lp, (b, r) in read_selection(selection).items()}, default)
    objs = [workdir / "obj" / plan.choices[lp].backend.replace(":", "_") / f"{lp}.timed.o"
            for lp in sorted(plan.choices)]
    exe = tmp / "composed.timed"
    mock.link(objs, exe)
    return run_mock_program(exe, tmp)
