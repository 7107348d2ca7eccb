import threading
from pathlib import Path

import pytest

from metacc import backends, mock
from metacc.backends import (BackendSpec, CompileJob, ConfigError, Registry, compile, compile_all,
                             default_registry, parse_config)
from metacc.runner import Completed, RecordingRunner


def flag_table(golden: Path):
    rows = {}
    for line in (golden / "flag_table.tsv").read_text().splitlines():
        if line.startswith("#"):
            continue
        name, serial, par, down = line.split("\t")
        rows[name] = (serial.split(), par.split(), down or None)
    return rows


def test_registry_matches_flag_table_token_for_token(golden):
    reg = {s.name: s for s in default_registry()}
    want = flag_table(golden)
    assert set(reg) == set(want)
    for name, (serial, par, down) in want.items():
        assert list(reg[name].flags_serial) == serial, name
        assert list(reg[name].flags_parallel) == par, name
        assert reg[name].downstream == down


def test_registry_examples():
    reg = Registry(default_registry())
    assert list(reg["gcc"].flags_serial) == ["-Ofast", "-march=native"]
    assert reg["pluto"].kind == "source_to_source" and reg["pluto"].downstream == "icc"
    assert sorted(s.name for s in reg.values() if s.supports_parallel) == ["icc", "pgcc", "pluto", "polly"]
    assert reg.default.name == "icc"
    assert len(reg) == 6


def test_mode_flags():
    reg = Registry(default_registry())
    assert reg["icc"].flags_for("parallel") == ["-Ofast", "-xHost", "-parallel"]
    assert reg["icc"].flags_for("openmp") == ["-Ofast", "-xHost", "-qopenmp"]
    assert reg["icc"].flags_for("baseline_o1") == ["-O1"]
    assert [s.name for s in reg.candidates("parallel")] == ["icc", "pgcc", "pluto", "polly"]


def test_polly_flags_pass_through_the_llvm_option_wrapper():
    spec = Registry(default_registry())["polly"]
    assert spec.command_flags(spec.flags_for("parallel")) == [
        "-O3", "-march=native", "-mllvm", "-polly", "-mllvm", "-polly-tiling",
        "-mllvm", "-polly-vectorizer=stripmine", "-mllvm", "-polly-parallel"]


def test_registry_invariants():
    specs = default_registry()
    with pytest.raises(ConfigError):
        Registry([s for s in specs if not s.is_default])
    bad = BackendSpec("x", "direct", "x {input} -o {output}", is_default=False)
    with pytest.raises(ConfigError):
        Registry(specs + [bad])
    orphan = BackendSpec("s2s", "source_to_source", "t {flags} {input} {output}", downstream="nope")
    with pytest.raises(ConfigError):
        Registry(specs + [orphan])


def test_config_overrides_and_extends():
    cfg = parse_config(
        "%remove pgcc\n"
        "gcc\tdirect\tgcc-12 {flags} -c {input} -o {output}\t-O2 | -ftree-parallelize-loops=4 | -fopenmp\t-lm\n"
        "%default gcc\n%compat gcc gnu\n%counter_provider perf-wrap {exe} {args} {out_csv}\n")
    reg = cfg.registry
    assert "pgcc" not in reg and reg.default.name == "gcc"
    assert reg["gcc"].flags_for("parallel") == ["-O2", "-ftree-parallelize-loops=4"]
    assert reg["gcc"].link_libs == ("-lm",)
    assert not reg["icc"].is_default
    assert cfg.counter_provider == "perf-wrap {exe} {args} {out_csv}"


def test_config_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("# ok\nbroken line without tabs\n")
    with pytest.raises(ConfigError):
        parse_config("%default nosuch\n")


def _src(tmp_path):
    src = tmp_path / "loop.c"
    src.write_text("/* mc:nest-begin */\nfor (;;) ;\n/* mc:nest-end */\n")
    return src


def test_direct_compile_single_invocation(tmp_path):
    reg = Registry(default_registry())
    r = RecordingRunner()
    res = compile(CompileJob("gcc", "serial", _src(tmp_path), tmp_path / "o" / "l.o"), reg["gcc"], reg, r)
    assert res.ok and res.object_path.exists()
    assert r.transcript == [["gcc", "-Ofast", "-march=native", "-c", str(tmp_path / "loop.c"),
                             "-o", str(tmp_path / "o" / "l.o")]]


def test_source_to_source_chain_is_two_invocations_in_order(tmp_path):
    reg = Registry(default_registry())
    r = RecordingRunner()
    res = compile(CompileJob("pluto", "parallel", _src(tmp_path), tmp_path / "p.o", "L0"), reg["pluto"], reg, r)
    assert res.ok
    (transform, downstream) = r.transcript
    assert transform[0] == "polycc" and transform[-3:-2] == ["--parallel"]
    assert downstream[0] == "icc" and "-qopenmp" in downstream
    assert downstream[downstream.index("-c") + 1] == transform[-1]
    scop = Path(transform[1]).read_text()
    assert "#pragma scop" in scop and "#pragma endscop" in scop


def test_missing_binary_raises_unavailable(tmp_path):
    reg = Registry(default_registry())
    r = RecordingRunner(missing={"pgcc"})
    with pytest.raises(backends.BackendUnavailable):
        compile(CompileJob("pgcc", "serial", _src(tmp_path), tmp_path / "x.o"), reg["pgcc"], reg, r)


def test_compile_failure_is_a_result(tmp_path):
    reg = Registry(default_registry())
    r = RecordingRunner(respond=lambda argv, env: Completed(1, "", "error: nope"))
    res = compile(CompileJob("gcc", "serial", _src(tmp_path), tmp_path / "x.o"), reg["gcc"], reg, r)
    assert not res.ok and res.error == "failed" and "nope" in res.diagnostics


def test_baseline_o1_default_only(tmp_path):
    reg = Registry(default_registry())
    with pytest.raises(ValueError):
        compile(CompileJob("gcc", "baseline_o1", _src(tmp_path), tmp_path / "x.o"), reg["gcc"], reg, RecordingRunner())


def test_compile_all_unavailable_backend_degrades(tmp_path):
    reg = Registry(default_registry())
    src = _src(tmp_path)
    jobs = [CompileJob(b, "serial", src, tmp_path / f"{b}.o", "L0") for b in ("gcc", "pgcc", "clang")]
    res = compile_all(jobs, 2, reg, RecordingRunner(missing={"pgcc"}))
    assert [(r.job.backend, r.status, r.error) for r in res] == [
        ("gcc", "ok", None), ("pgcc", "failed", "unavailable"), ("clang", "ok", None)]


def test_compile_all_bounded_concurrency(tmp_path):
    reg = Registry(default_registry())
    src = _src(tmp_path)
    r = RecordingRunner(delay=0.02)
    jobs = [CompileJob("gcc", "serial", src, tmp_path / f"{i}.o") for i in range(12)]
    res = compile_all(jobs, 4, reg, r)
    assert r.max_active <= 4
    assert [x.job for x in res] == jobs


def test_compile_all_pool_size_validated(tmp_path):
    with pytest.raises(ValueError):
        compile_all([], 0, Registry(default_registry()))


SIX_MOCKS = "%reset\n" + "".join(
    f"mock:{t}\tmock\tmockcc {{flags}} -c {{input}} -o {{output}}\t-O{i}\n" for i, t in enumerate("abcdef")
) + "%default mock:a\n%fail mock:d *\n"


def _mock_jobs(tmp_path, out):
    loops = [f"L{i}" for i in range(5)]
    src = tmp_path / "l.c"
    src.write_text("int x;\n")
    return [CompileJob(f"mock:{t}", "serial", src, tmp_path / out / t / f"{lp}.o", lp)
            for lp in loops for t in "abcdef"]


def test_mock_failure_isolation_and_order(tmp_path):
    reg = parse_config(SIX_MOCKS).registry
    res = compile_all(_mock_jobs(tmp_path, "o"), 3, reg, RecordingRunner(), tmp_path / "ledger.tsv")
    assert sum(r.ok for r in res) == 25
    assert [r.job.backend for r in res if not r.ok] == ["mock:d"] * 5
    assert [r.job.loop_id for r in res] == [f"L{i}" for i in range(5) for _ in "abcdef"]
    assert len((tmp_path / "ledger.tsv").read_text().splitlines()) == 25


def test_mock_determinism_across_pool_sizes(tmp_path):
    reg = parse_config(SIX_MOCKS).registry
    outputs = []
    for pool, out in ((1, "p1"), (4, "p4")):
        res = compile_all(_mock_jobs(tmp_path, out), pool, reg, RecordingRunner(), tmp_path / f"{out}.tsv")
        outputs.append([r.object_path.read_bytes() if r.ok else None for r in res])
        ledger = sorted((tmp_path / f"{out}.tsv").read_text().replace(f"/{out}/", "/").splitlines())
        outputs.append(ledger)
    assert outputs[0] == outputs[2] and outputs[1] == outputs[3]


def test_mock_compile_records_call(tmp_path):
    reg = parse_config(SIX_MOCKS).registry
    ledger = tmp_path / "ledger.tsv"
    res = compile(CompileJob("mock:a", "serial", _src(tmp_path), tmp_path / "a.o", "L0", "timed"),
                  reg["mock:a"], reg, RecordingRunner(), ledger)
    assert res.ok
    assert ledger.read_text().split("\t")[:4] == ["mock:a", "serial", "timed", "L0"]
    assert mock.read_stub(res.object_path)["backend"] == "mock:a"


def test_link_invokes_default_driver(tmp_path):
    reg = Registry(default_registry())
    r = RecordingRunner()
    backends.link(reg.default, [tmp_path / "a.o", tmp_path / "b.o"], tmp_path / "app", ["-lm"], r)
    assert r.transcript == [["icc", str(tmp_path / "a.o"), str(tmp_path / "b.o"), "-o", str(tmp_path / "app"), "-lm"]]


def test_link_failure_keeps_diagnostics(tmp_path):
    reg = Registry(default_registry())
    r = RecordingRunner(respond=lambda argv, env: Completed(1, "", "undefined reference to `f'"))
    with pytest.raises(backends.LinkFailed) as exc:
        backends.link(reg.default, [tmp_path / "a.o"], tmp_path / "app", [], r)
    assert "undefined reference" in exc.value.diagnostics


def test_unavailable_warning_is_emitted_once(tmp_path, caplog):
    reg = Registry(default_registry())
    src = _src(tmp_path)
    jobs = [CompileJob("pgcc", "serial", src, tmp_path / f"{i}.o") for i in range(8)]
    compile_all(jobs, 4, reg, RecordingRunner(missing={"pgcc"}))
    assert sum("pgcc" in m for m in caplog.messages) == 1
