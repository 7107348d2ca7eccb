from pathlib import Path

import pytest

from metacc import backends, synthesizer
from metacc.backends import BackendSpec, Registry
from metacc.mlopt import FeatureVector, ForestModel, ForestParams, Node, schema_hash
from metacc.profiler import TimingTable
from metacc.runner import RecordingRunner
from metacc.synthesizer import (Choice, ManifestRow, SelectionPlan, apply_runtime_compat, build_link_plan,
                                format_manifest, manifest_path, parse_manifest, select_by_prediction,
                                select_by_profile)


def _table(rows):
    t = TimingTable()
    for (lp, b), samples in rows.items():
        t.entries[(lp, b)] = list(samples)
    return t


def test_profile_picks_lowest_median():
    t = _table({("L0", "gcc"): [5, 100, 7], ("L0", "icc"): [6, 6, 6], ("L1", "gcc"): [9], ("L1", "icc"): [3]})
    plan = select_by_profile(t, ["L0", "L1"], "icc")
    assert plan.choices == {"L0": Choice("icc", "profiled"), "L1": Choice("icc", "profiled")}
    t.entries[("L0", "gcc")] = [5, 5, 100]
    assert select_by_profile(t, ["L0"], "icc").choices["L0"].backend == "gcc"


def test_tie_prefers_default_then_name():
    t = _table({("L0", "polly"): [4], ("L0", "icc"): [4], ("L0", "clang"): [4]})
    assert select_by_profile(t, ["L0"], "icc").choices["L0"].backend == "icc"
    assert select_by_profile(t, ["L0"], "gcc").choices["L0"].backend == "clang"


def test_loop_without_samples_falls_back():
    t = _table({("L0", "gcc"): [4]})
    plan = select_by_profile(t, ["L0", "L9"], "icc")
    assert plan.choices["L9"] == Choice("icc", "default_fallback")
    assert plan.counts() == {"profiled": 1, "predicted": 0, "default_fallback": 1}


def test_unusable_backend_is_vetoed():
    t = _table({("L0", "gcc"): [1], ("L0", "icc"): [9]})
    plan = select_by_profile(t, ["L0"], "icc", usable=lambda lp, b: b != "gcc")
    assert plan.choices["L0"] == Choice("icc", "profiled")


def _model(label="polly"):
    labels = ("icc", "polly")
    return ForestModel(ForestParams(n_trees=1), ("x",), labels, [Node(cls=labels.index(label))], 1.0)


def test_prediction_covers_loops_with_features():
    loops = [f"L{i}" for i in range(10)]
    fvs = [FeatureVector(f"L{i}", (1.0,), schema_hash(("x",))) for i in range(7)]
    plan = select_by_prediction(_model(), fvs, loops, "icc")
    assert plan.counts() == {"profiled": 0, "predicted": 7, "default_fallback": 3}
    assert {c.backend for lp, c in plan.choices.items() if c.reason == "predicted"} == {"polly"}


def test_prediction_without_object_keeps_default():
    fvs = [FeatureVector("L0", (1.0,), schema_hash(("x",)))]
    plan = select_by_prediction(_model(), fvs, ["L0"], "icc", usable=lambda lp, b: b == "icc")
    assert plan.choices["L0"] == Choice("icc", "predicted", "unavailable:polly")


def _spec(name, compat, **kw):
    return BackendSpec(name, "direct", f"{name} {{flags}} -c {{input}} -o {{output}}",
                       ("-O2",), ("-par",), ("-omp",), compat=compat, **kw)


REG = Registry([
    _spec("icc", "llvm-intel", is_default=True, openmp_libs=("-liomp5",)),
    _spec("clang", "llvm-intel"),
    _spec("gcc", "gnu", link_libs=("-lm",), openmp_libs=("-lgomp",)),
    BackendSpec("pluto", "source_to_source", "polycc {flags} {input} -o {output}", ("--tile",),
                ("--tile", "--parallel"), (), downstream="icc"),
])


def test_openmp_demotes_other_runtime_groups():
    plan = SelectionPlan({"L0": Choice("gcc", "profiled"), "L1": Choice("clang", "profiled"),
                          "L2": Choice("pluto", "profiled")}, "icc")
    assert apply_runtime_compat(plan, REG, "openmp") == ["L0"]
    assert plan.choices["L0"] == Choice("icc", "profiled", "demoted:gcc")
    assert plan.choices["L1"].backend == "clang"
    assert plan.choices["L2"].backend == "pluto"


def test_serial_mode_mixes_freely():
    plan = SelectionPlan({"L0": Choice("gcc", "profiled")}, "icc")
    assert apply_runtime_compat(plan, REG, "serial") == []
    assert plan.choices["L0"].backend == "gcc"


def test_link_plan_and_single_link_invocation(tmp_path):
    plan = SelectionPlan({"L0": Choice("gcc", "profiled"), "L1": Choice("icc", "profiled"),
                          "L2": Choice("pluto", "default_fallback")}, "icc")
    objs = {(lp, b): tmp_path / f"{lp}.{b}.o" for lp in ("L0", "L1", "L2") for b in ("gcc", "icc", "pluto")}
    lp = build_link_plan(plan, objs, [tmp_path / "base.o"], REG, "openmp", tmp_path / "a.out", ["-lfoo"])
    assert lp.objects == [objs[("L0", "gcc")], objs[("L1", "icc")], objs[("L2", "pluto")], tmp_path / "base.o"]
    assert lp.libs == ["-liomp5", "-lm", "-lgomp", "-lfoo"]
    runner = RecordingRunner()
    synthesizer.link(lp, REG, "openmp", runner)
    assert len(runner.transcript) == 1
    argv = runner.transcript[0]
    assert argv[0] == "icc"
    assert argv[1:5] == [str(p) for p in lp.objects]
    assert argv[5:7] == ["-o", str(tmp_path / "a.out")]
    assert argv[7:] == ["-omp", "-liomp5", "-lm", "-lgomp", "-lfoo"]


def test_link_plan_needs_every_chosen_object(tmp_path):
    plan = SelectionPlan({"L0": Choice("gcc", "profiled")}, "icc")
    with pytest.raises(backends.LinkFailed):
        build_link_plan(plan, {}, [], REG, "serial", tmp_path / "a.out")


def test_manifest_round_trip_and_golden(golden):
    rows = [ManifestRow("-", "icc", "/b/app.o", "base"),
            ManifestRow("L0", "icc", "/b/obj/icc/L0.clean.o", "clean"),
            ManifestRow("L0", "polly", "/b/obj/polly/L0.timed.o", "timed")]
    text = format_manifest(rows)
    assert text == (golden / "manifest.tsv").read_text()
    assert parse_manifest(text) == rows
    with pytest.raises(ValueError):
        parse_manifest("L0\ticc\n")
    assert manifest_path("out/app.o") == Path("out/app.o.mcm")
