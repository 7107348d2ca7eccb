import random
import threading
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metacc import profiler
from metacc.profiler import (CounterSet, EmptySamples, ProviderUnavailable, RunFailed, TimingTable,
                             collect_counters, format_record, median_ns, parse_counter_csv, parse_records,
                             run_profiled)
from metacc.runner import Completed, RecordingRunner


def sort_index_median(xs):
    """Independent oracle: sort, then take index floor((n-1)/2)."""
    ordered = sorted(xs)
    return ordered[(len(ordered) - 1) // 2]


def test_median_examples():
    assert median_ns([3, 1, 2]) == 2
    assert median_ns([5]) == 5
    assert median_ns([4, 1, 3, 2]) == 2
    with pytest.raises(EmptySamples):
        median_ns([])


@settings(max_examples=300)
@given(st.lists(st.integers(0, 10**12), min_size=1, max_size=9))
def test_median_matches_oracle(xs):
    assert median_ns(xs) == sort_index_median(xs)
    assert median_ns(xs) in xs


def test_record_wire_format():
    assert format_record("gemm_main_L2", 1500) == "MC\tgemm_main_L2\t1500\n"


def test_parse_sums_repeated_executions_and_skips_malformed():
    text = "MC\tL0\t40\nMC\tL0\t60\nMC\tL1\t7\ngarbage\nMC\tL2\t-5\nMC\tL3\n\n"
    totals, bad = parse_records(text)
    assert totals == {"L0": 100, "L1": 7}
    assert bad == 3


@given(st.lists(st.tuples(st.sampled_from(["L0", "L1", "L2"]), st.integers(0, 10**9)), max_size=30),
       st.randoms())
def test_ingestion_is_order_independent(records, rnd):
    lines = [format_record(lp, ns) for lp, ns in records]
    shuffled = lines[:]
    rnd.shuffle(shuffled)
    assert parse_records("".join(lines)) == parse_records("".join(shuffled))


def _program(per_run):
    """Fake executable: run i appends the records listed in per_run[i]."""
    calls = []

    def respond(argv, env):
        i = len(calls)
        calls.append(argv)
        out = Path(env["MC_PROFILE_OUT"])
        assert not out.exists()  # fresh file for every run
        with open(out, "a") as f:
            for lp, ns in per_run[i]:
                f.write(format_record(lp, ns))
        return Completed(0)
    return respond, calls


def test_run_profiled_stores_per_run_totals(tmp_path):
    respond, calls = _program([[("L0", 900)], [("L0", 400), ("L0", 600)], [("L0", 1100)]])
    table = run_profiled(tmp_path / "app", "--n 5", 3, "icc", RecordingRunner(respond=respond), tmp_path)
    assert table.entries == {("L0", "icc"): [900, 1000, 1100]}
    assert calls[0] == [str(tmp_path / "app"), "--n", "5"]


def test_loop_that_never_runs_has_no_entry(tmp_path):
    respond, _ = _program([[("L0", 10)], [("L0", 12)], [("L0", 11)]])
    table = run_profiled(tmp_path / "app", "", 3, "gcc", RecordingRunner(respond=respond), tmp_path)
    assert ("L1", "gcc") not in table.entries
    assert table.medians("L1") == {}


def test_nonzero_exit_is_run_failed(tmp_path):
    r = RecordingRunner(respond=lambda argv, env: Completed(3, "", "segfault"))
    with pytest.raises(RunFailed):
        run_profiled(tmp_path / "app", "", 2, "pgcc", r, tmp_path)


def test_profiled_runs_are_exclusive(tmp_path):
    r = RecordingRunner(delay=0.01)
    threads = [threading.Thread(target=run_profiled, args=(tmp_path / "app", "", 3, f"b{i}", r, tmp_path))
               for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(r.transcript) == 12 and r.max_active == 1


def test_timing_table_dump_and_merge():
    a = TimingTable({("L0", "icc"): [3, 1, 2]}, 3)
    b = TimingTable({("L0", "gcc"): [5, 5, 5]}, 3)
    a.merge(b)
    assert a.medians("L0") == {"icc": 2, "gcc": 5}
    assert a.dump() == "loop_id\tbackend\tmedian_ns\truns_ns\nL0\tgcc\t5\t5,5,5\nL0\ticc\t2\t3,1,2\n"


def test_counter_csv_parse_example():
    sets = parse_counter_csv("loop_id,event,count\nL0,inst_retired,2000000\nL0,l2_miss,500\n")
    assert sets == [CounterSet("L0", {"l2_miss": 500}, 2000000)]


def test_counter_fixture_three_loops(fixtures):
    sets = parse_counter_csv((fixtures / "counters_3loops.csv").read_text())
    assert [cs.loop_id for cs in sets] == ["L0", "L1", "L2"]
    assert all(len(cs.counters) == 12 and cs.instructions > 0 for cs in sets)


def test_counter_csv_rejects_bad_input():
    with pytest.raises(ValueError):
        parse_counter_csv("loop,event,count\n")
    with pytest.raises(ValueError):
        parse_counter_csv("loop_id,event,count\nL0,x,-1\n")


def test_counter_csv_round_trip_is_byte_exact(fixtures):
    text = (fixtures / "counters_3loops.csv").read_text()
    assert profiler.format_counter_csv(parse_counter_csv(text)) == text


def _provider(rows):
    def respond(argv, env):
        out = Path(argv[argv.index("--out") + 1])
        out.write_text("loop_id,event,count\n" + "".join(f"{r}\n" for r in rows))
        return Completed(0)
    return respond


def test_collect_counters_runs_provider_template(tmp_path):
    r = RecordingRunner(respond=_provider(["L0,inst_retired,1000", "L0,cycles,70"]))
    sets = collect_counters(tmp_path / "base", "a b", "prov --out {out_csv} -- {exe} {args}", r, tmp_path)
    assert sets == [CounterSet("L0", {"cycles": 70}, 1000)]
    argv = r.transcript[0]
    assert argv[0] == "prov" and argv[-3:] == [str(tmp_path / "base"), "a", "b"]


def test_loop_absent_from_csv_has_no_counterset(tmp_path):
    r = RecordingRunner(respond=_provider(["L0,inst_retired,1000"]))
    sets = collect_counters(tmp_path / "base", "", "prov --out {out_csv} {exe}", r, tmp_path)
    assert [cs.loop_id for cs in sets] == ["L0"]


def test_provider_unavailable(tmp_path):
    with pytest.raises(ProviderUnavailable):
        collect_counters(tmp_path / "base", "", None)
    with pytest.raises(ProviderUnavailable):
        collect_counters(tmp_path / "base", "", "vtune-wrap {exe} {out_csv}", RecordingRunner(missing={"vtune-wrap"}))


def test_whole_program_counts_are_rejected(tmp_path):
    r = RecordingRunner(respond=_provider(["*,inst_retired,1000", "*,cycles,3"]))
    with pytest.raises(ProviderUnavailable):
        collect_counters(tmp_path / "base", "", "prov --out {out_csv} {exe}", r, tmp_path)
