"""The ``mc`` command: argument parsing, mode dispatch and pipeline orchestration."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import backends, energyrep, mlopt, profiler, synthesizer
from .backends import BackendConfig, CompileJob, Registry
from .cparse.headers import scan_headers
from .extractor import extract_sources
from .profiler import TimingTable
from .runner import Runner, SubprocessRunner
from .synthesizer import ManifestRow, SelectionPlan

log = logging.getLogger("metacc")

SOURCE_SUFFIXES = (".c",)


class UsageError(Exception):
    pass


class PhaseError(Exception):
    def __init__(self, phase: str, message: str):
        super().__init__(message)
        self.phase = phase


class MismatchedKeys(ValueError):
    pass


class NonpositiveTime(ValueError):
    pass


def geomean_speedup(baseline_ns: dict, composed_ns: dict) -> float:
    if set(baseline_ns) != set(composed_ns):
        raise MismatchedKeys(f"apps differ: {sorted(set(baseline_ns) ^ set(composed_ns))}")
    if not baseline_ns:
        raise MismatchedKeys("no apps")
    if any(v <= 0 for v in (*baseline_ns.values(), *composed_ns.values())):
        raise NonpositiveTime("times must be positive")
    logs = [math.log(baseline_ns[k] / composed_ns[k]) for k in sorted(baseline_ns)]
    return math.exp(math.fsum(logs) / len(logs))


def format_selection_report(plan: SelectionPlan, table_or_fvs=None, backends_=None) -> str:
    table = table_or_fvs if isinstance(table_or_fvs, TimingTable) else None
    names = sorted(backends_ if backends_ is not None else (table.backends() if table else []))
    lines = [",".join(["loop_id", "chosen_backend", "reason", *(f"median_ns_{b}" for b in names)])]
    for loop_id in sorted(plan.choices):
        c = plan.choices[loop_id]
        medians = table.medians(loop_id) if table else {}
        lines.append(",".join([loop_id, c.backend, c.reason, *(str(medians.get(b, "")) for b in names)]))
    return "\n".join(lines) + "\n"


def emit_selection_report(plan: SelectionPlan, table_or_fvs, path, backends_=None) -> Path:
    path = Path(path)
    path.write_text(format_selection_report(plan, table_or_fvs, backends_))
    return path


# -- configuration -------------------------------------------------------

@dataclass
class RunConfig:
    sources: list = field(default_factory=list)
    output_path: str | None = None
    compile_only: bool = False
    predict: bool = False
    power_profile: bool = False
    parallel: bool = False
    openmp: bool = False
    train: str | None = None
    train_mode: str | None = None
    advanced_profile_only: bool = False
    input_args: str = ""
    runs: int = 3
    pool_size: int = os.cpu_count() or 1
    backend_config_path: str | None = None
    model_path: str | None = None
    seed: int = 0
    n_trees: int = 100
    includes: list = field(default_factory=list)
    defines: list = field(default_factory=list)
    libdirs: list = field(default_factory=list)
    libs: list = field(default_factory=list)
    min_loop_lines: int = 1
    workdir: str | None = None
    report_path: str | None = None

    @property
    def mode(self) -> str:
        return "openmp" if self.openmp else "parallel" if self.parallel else "serial"

    def validate(self) -> None:
        if self.train and (self.predict or self.power_profile or self.compile_only or self.sources):
            raise UsageError("--train cannot be combined with sources, -c, --predict or --power-profile")
        if self.predict and self.power_profile:
            raise UsageError("--predict and --power-profile are mutually exclusive")
        if self.parallel and self.openmp:
            raise UsageError("--parallel and --openmp are mutually exclusive")
        if self.runs < 1:
            raise UsageError("--runs must be >= 1")
        if self.pool_size < 1:
            raise UsageError("-j must be >= 1")
        if self.train_mode and not self.train:
            raise UsageError("--mode only applies to --train")
        if not self.train and not self.sources:
            raise UsageError("no input files")
        if self.compile_only and (self.predict or self.power_profile or self.advanced_profile_only):
            raise UsageError("-c compiles candidates only; select at link time")
        if self.compile_only and self.output_path and len(self.sources) > 1:
            raise UsageError("-o with -c needs a single source")
        if self.advanced_profile_only and self.power_profile:
            raise UsageError("--advanced-profile-only and --power-profile are mutually exclusive")
        if self.predict and not self.model_path:
            raise UsageError("--predict needs --model")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mc",
        description="Compile each C loop nest with several compilers and link the fastest per loop.")
    ap.add_argument("sources", nargs="*", help="C sources, or objects from a previous -c step")
    ap.add_argument("-o", dest="output_path", metavar="OUT")
    ap.add_argument("-c", dest="compile_only", action="store_true",
                    help="compile candidates only; profiling and selection happen at link time")
    ap.add_argument("--input", dest="input_args", default="", metavar="ARGS",
                    help="arguments for the profiled program runs")
    ap.add_argument("--predict", action="store_true", help="select by model prediction instead of profiling")
    ap.add_argument("--model", dest="model_path", metavar="PATH")
    ap.add_argument("--power-profile", action="store_true", help="write the per-loop energy report")
    ap.add_argument("--advanced-profile-only", action="store_true",
                    help="collect per-loop hardware counters and stop")
    par = ap.add_mutually_exclusive_group()
    par.add_argument("--parallel", action="store_true", help="use auto-parallelizing flags")
    par.add_argument("--openmp", action="store_true", help="compile OpenMP loop nests")
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("-j", dest="pool_size", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--backend-config", dest="backend_config_path", metavar="PATH")
    ap.add_argument("--train", metavar="CSV", help="train a model from a dataset CSV")
    ap.add_argument("--mode", dest="train_mode", choices=("serial", "parallel"),
                    help="model targets for --train (default: write both)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trees", dest="n_trees", type=int, default=100)
    ap.add_argument("--min-loop-lines", type=int, default=1)
    ap.add_argument("--workdir", metavar="DIR", help="build directory (default: OUT.mcbuild)")
    ap.add_argument("--report", dest="report_path", metavar="PATH",
                    help="selection CSV (default: OUT.selection.csv)")
    ap.add_argument("-I", dest="includes", action="append", default=[], metavar="DIR")
    ap.add_argument("-D", dest="defines", action="append", default=[], metavar="MACRO")
    ap.add_argument("-L", dest="libdirs", action="append", default=[], metavar="DIR")
    ap.add_argument("-l", dest="libs", action="append", default=[], metavar="LIB")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def parse_args(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    ns.pop("verbose")
    return RunConfig(**ns)


# -- pipeline ------------------------------------------------------------

def data_dir() -> Path:
    return Path(str(resources.files("metacc") / "data"))


def _safe(name: str) -> str:
    return name.replace(":", "_").replace("/", "_")


@dataclass
class Build:
    """Objects gathered from compile steps or -c manifests."""
    loops: list = field(default_factory=list)          # eligible loop ids, in source order
    base_objects: list = field(default_factory=list)
    objects: dict = field(default_factory=dict)        # (loop_id, backend, variant) -> Path

    def get(self, loop_id, backend, variant="clean"):
        return self.objects.get((loop_id, backend, variant))


class Pipeline:
    def __init__(self, cfg: RunConfig, bcfg: BackendConfig, runner: Runner | None = None):
        self.cfg = cfg
        self.bcfg = bcfg
        self.registry: Registry = bcfg.registry
        self.default = self.registry.default
        self.mode = cfg.mode
        self.runner = runner or SubprocessRunner()
        self.data = data_dir()
        self.flags = tuple(f"-I{d}" for d in cfg.includes) + tuple(f"-D{d}" for d in cfg.defines)
        self.link_flags = [f"-L{d}" for d in cfg.libdirs] + [f"-l{lib}" for lib in cfg.libs]
        self.candidates = [s.name for s in self.registry.candidates(self.mode)]
        self.work: Path = Path(".")
        self.ledger: Path | None = None

    def set_workdir(self, path) -> None:
        self.work = Path(path)
        self.work.mkdir(parents=True, exist_ok=True)
        self.ledger = self.work / "mock-ledger.tsv"

    # extraction ---------------------------------------------------------

    def extract(self, sources):
        cpp = list(self.bcfg.preprocessor)
        arts, results = extract_sources(
            sources, lambda p: scan_headers(p, cpp, self.cfg.includes, self.cfg.defines),
            self.cfg.min_loop_lines)
        srcdir = self.work / "src"
        srcdir.mkdir(parents=True, exist_ok=True)
        bases, loops, used = [], [], set()
        for res in results:
            name = res.path.stem
            while name in used:
                name += "_"
            used.add(name)
            base = srcdir / f"{name}.c"
            base.write_text(arts.base_file[res.path])
            bases.append((res.path, base))
            for nest in res.nests:
                if not nest.eligible:
                    log.info("%s: skipped (%s)", nest.loop_id, ", ".join(nest.ineligibility_reasons))
                    continue
                files = arts.loop_files[nest.loop_id]
                paths = {}
                for variant, text in (("clean", files.clean), ("timed", files.timed),
                                      ("energized", files.energized)):
                    paths[variant] = srcdir / f"{nest.loop_id}.{variant}.c"
                    paths[variant].write_text(text)
                loops.append((nest.loop_id, res.path.parent, paths))
        n_all = sum(len(r.nests) for r in results)
        log.info("extracted %d of %d loop nests", len(loops), n_all)
        return bases, loops

    # compilation --------------------------------------------------------

    def _loop_job(self, backend, mode, loop_id, srcdir, path, variant) -> CompileJob:
        extra = self.flags + (f"-I{srcdir}", f"-I{self.data}")
        if variant == "energized":
            extra += tuple(self.bcfg.energy_flags)
        obj = self.work / "obj" / _safe(backend) / f"{loop_id}.{variant}{'.O1' if mode == 'baseline_o1' else ''}.o"
        return CompileJob(backend, mode, path, obj, loop_id, variant, extra)

    def _base_job(self, orig: Path, base: Path, mode: str, obj: Path | None = None) -> CompileJob:
        obj = obj or self.work / "obj" / "base" / f"{base.stem}{'.O1' if mode == 'baseline_o1' else ''}.o"
        return CompileJob(self.default.name, mode, base, obj, None, "base",
                          self.flags + (f"-I{orig.parent}",))

    def _runtime_job(self, energy: bool, mode: str = "serial") -> CompileJob:
        flags = (f"-I{self.data}",) + (tuple(self.bcfg.energy_flags) if energy else ())
        name = "mc_runtime_energy" if energy else "mc_runtime"
        return CompileJob(self.default.name, mode, self.data / "mc_runtime.c",
                          self.work / "obj" / "runtime" / f"{name}.o", None, "runtime", flags)

    def compile(self, jobs):
        results = backends.compile_all(jobs, self.cfg.pool_size, self.registry, self.runner, self.ledger)
        for r in results:
            if not r.ok and r.error == "failed":
                log.warning("%s failed on %s: %s", r.job.backend, r.job.loop_id or r.job.source_path,
                            (r.diagnostics or "").splitlines()[:1])
        return results

    def compile_required(self, jobs):
        results = self.compile(jobs)
        bad = [r for r in results if not r.ok]
        if bad:
            r = bad[0]
            raise PhaseError("compile", f"default backend {r.job.backend} failed on "
                             f"{r.job.source_path}: {r.diagnostics}")
        return [r.object_path for r in results]

    def candidate_build(self, bases, loops, variants=("clean", "timed")) -> Build:
        build = Build(loops=[lp for lp, _, _ in loops])
        build.base_objects = self.compile_required([self._base_job(o, b, self.mode) for o, b in bases])
        jobs = [self._loop_job(b, self.mode, lp, srcdir, paths[v], v)
                for lp, srcdir, paths in loops for b in self.candidates for v in variants]
        for r in self.compile(jobs):
            if r.ok:
                build.objects[(r.job.loop_id, r.job.backend, r.job.variant)] = r.object_path
        for lp in build.loops:
            if build.get(lp, self.default.name) is None:
                raise PhaseError("compile", f"default backend {self.default.name} failed on {lp}")
        return build

    # linking ------------------------------------------------------------

    def _runtime_flags(self) -> list[str]:
        return [] if self.default.kind == "mock" else ["-lpthread"]

    def link_variant(self, build: Build, backend: str, variant: str, runtime_obj: Path, out: Path,
                     mode: str | None = None) -> Path | None:
        """Executable with ``backend``'s ``variant`` objects; other loops use default clean objects."""
        mode = mode or self.mode
        objs, mine = [], 0
        for lp in build.loops:
            obj = build.get(lp, backend, variant)
            if obj is not None:
                mine += 1
            else:
                obj = build.get(lp, self.default.name, "clean")
            objs.append(obj)
        if not mine:
            log.warning("%s: no %s objects; skipped", backend, variant)
            return None
        spec = self.registry[backend]
        libs = synthesizer._dedup(self.default.link_libs_for(mode) + spec.link_libs_for(mode))
        flags = (self.default.command_flags(synthesizer.default_link_flags(self.default, mode))
                 + libs + self.link_flags + self._runtime_flags())
        try:
            return backends.link(self.default, objs + list(build.base_objects) + [runtime_obj],
                                 out, flags, self.runner)
        except backends.LinkFailed as exc:
            log.warning("%s: %s; excluded (%s)", backend, exc, exc.diagnostics[:300])
            return None

    def final_link(self, build: Build, plan: SelectionPlan, output) -> Path:
        synthesizer.apply_runtime_compat(plan, self.registry, self.mode)
        clean = {(lp, b): p for (lp, b, v), p in build.objects.items() if v == "clean"}
        lp_plan = synthesizer.build_link_plan(plan, clean, build.base_objects, self.registry,
                                              self.mode, output, self.link_flags)
        try:
            return synthesizer.link(lp_plan, self.registry, self.mode, self.runner)
        except backends.LinkFailed as exc:
            raise PhaseError("link", f"{exc}\n{exc.diagnostics}") from None

    def usable(self, build: Build):
        return lambda lp, b: build.get(lp, b) is not None

    # modes --------------------------------------------------------------

    def profile(self, build: Build) -> TimingTable:
        runtime = self.compile_required([self._runtime_job(False)])[0]
        table = TimingTable()
        exe_dir = self.work / "exe"
        for b in self.candidates:
            exe = self.link_variant(build, b, "timed", runtime, exe_dir / f"{_safe(b)}.timed")
            if exe is None:
                continue
            try:
                table.merge(profiler.run_profiled(exe, self.cfg.input_args, self.cfg.runs, b,
                                                  self.runner, self.work))
            except profiler.RunFailed as exc:
                log.warning("%s: %s; excluded for every loop", b, exc)
        (self.work / "timing.tsv").write_text(table.dump())
        return table

    def baseline_counters(self, bases, loops, out_csv=None):
        energy_rt = self.compile_required([self._runtime_job(True, "baseline_o1")])[0]
        base_o1 = self.compile_required([self._base_job(o, b, "baseline_o1") for o, b in bases])
        jobs = [self._loop_job(self.default.name, "baseline_o1", lp, srcdir, paths["energized"], "energized")
                for lp, srcdir, paths in loops]
        loop_objs = self.compile_required(jobs)
        exe = backends.link(self.default, loop_objs + base_o1 + [energy_rt], self.work / "exe" / "baseline.O1",
                            self.link_flags + self._runtime_flags(), self.runner)
        try:
            return profiler.collect_counters(exe, self.cfg.input_args, self.bcfg.counter_provider,
                                             self.runner, self.work, out_csv)
        except profiler.ProviderUnavailable as exc:
            raise PhaseError("counters", str(exc)) from None
        except profiler.RunFailed as exc:
            raise PhaseError("counters", f"{exc}: {exc.stderr.strip()[:300]}") from None


def _load_backend_config(path) -> BackendConfig:
    if path:
        return backends.load_config(path)
    return BackendConfig(Registry(backends.default_registry()))


def _summary(plan: SelectionPlan) -> str:
    counts = plan.counts()
    return ", ".join(f"{n} {r}" for r, n in counts.items() if n)


def run_train(cfg: RunConfig) -> int:
    try:
        schema, rows = mlopt.read_dataset(cfg.train)
    except (OSError, ValueError) as exc:
        raise PhaseError("train", str(exc)) from None
    modes = [cfg.train_mode] if cfg.train_mode else ["serial", "parallel"]
    out = Path(cfg.output_path or "model.mcm")
    for mode in modes:
        targets = mlopt.TARGETS[mode]
        usable = [(fv, t) for fv, t in rows if any(b in targets for b in t)]
        if len(usable) < len(rows):
            log.warning("%d instance(s) have no %s-mode target timing; dropped", len(rows) - len(usable), mode)
        if not usable:
            raise PhaseError("train", f"no instances with {mode}-mode targets")
        data = mlopt.label_and_relabel(usable, targets)
        params = mlopt.ForestParams(n_trees=cfg.n_trees, seed=cfg.seed)
        model = mlopt.train(data, params, schema, sorted(targets), mode)
        path = out if len(modes) == 1 else out.with_name(f"{out.stem}.{mode}{out.suffix}")
        mlopt.save_model(model, path)
        print(f"{mode} model: {path} ({len(data)} instances, {params.n_trees} trees), "
              f"OOB accuracy {model.oob_accuracy:.4f}")
    return 0


def _split_inputs(cfg: RunConfig):
    sources, objects = [], []
    for s in cfg.sources:
        p = Path(s)
        if not p.exists():
            raise UsageError(f"{s}: no such file")
        (sources if p.suffix in SOURCE_SUFFIXES else objects).append(p)
    return sources, objects


def run_compile_only(cfg: RunConfig, pipe: Pipeline, sources) -> int:
    for src in sources:
        obj = Path(cfg.output_path) if cfg.output_path else Path(src.stem + ".o")
        pipe.set_workdir(cfg.workdir or f"{obj}.mcbuild")
        bases, loops = pipe.extract([src])
        build = Build(loops=[lp for lp, _, _ in loops])
        pipe.compile_required([pipe._base_job(src, bases[0][1], pipe.mode, obj)])
        jobs = [pipe._loop_job(b, pipe.mode, lp, d, paths[v], v)
                for lp, d, paths in loops for b in pipe.candidates for v in ("clean", "timed")]
        rows = [ManifestRow(synthesizer.MANIFEST_BASE, pipe.default.name, str(obj.resolve()), "base")]
        for r in pipe.compile(jobs):
            if r.ok:
                rows.append(ManifestRow(r.job.loop_id, r.job.backend, str(Path(r.object_path).resolve()),
                                        r.job.variant))
        synthesizer.manifest_path(obj).write_text(synthesizer.format_manifest(rows))
        log.info("%s: %d loop nests, manifest %s", obj, len(build.loops), synthesizer.manifest_path(obj))
    return 0


def _merge_manifests(build: Build, objects) -> None:
    for obj in objects:
        mpath = synthesizer.manifest_path(obj)
        if not mpath.exists():
            build.base_objects.append(obj)
            continue
        for row in synthesizer.parse_manifest(mpath.read_text()):
            if row.loop_id == synthesizer.MANIFEST_BASE:
                build.base_objects.append(Path(row.object_path))
                continue
            if row.loop_id not in build.loops:
                build.loops.append(row.loop_id)
            key = (row.loop_id, row.backend, row.variant)
            if key in build.objects:
                raise UsageError(f"loop {row.loop_id} appears in more than one manifest")
            build.objects[key] = Path(row.object_path)


def run_pipeline(cfg: RunConfig, bcfg: BackendConfig, runner: Runner | None = None) -> int:
    pipe = Pipeline(cfg, bcfg, runner)
    sources, objects = _split_inputs(cfg)
    if cfg.compile_only:
        if objects:
            raise UsageError("-c takes C sources only")
        return run_compile_only(cfg, pipe, sources)

    stem = Path(cfg.sources[0]).stem
    if cfg.power_profile:
        output = Path(cfg.output_path or f"{stem}.energy.csv")
    elif cfg.advanced_profile_only:
        output = Path(cfg.output_path or f"{stem}.counters.csv")
    else:
        output = Path(cfg.output_path or "a.out")
    pipe.set_workdir(cfg.workdir or f"{output}.mcbuild")
    if (cfg.predict or cfg.power_profile or cfg.advanced_profile_only) and objects:
        raise UsageError("this mode needs C sources, not objects")
    bases, loops = pipe.extract(sources) if sources else ([], [])

    if cfg.advanced_profile_only:
        sets = pipe.baseline_counters(bases, loops)
        output.write_text(profiler.format_counter_csv(sets))
        print(f"counters for {len(sets)} loop nest(s): {output}")
        return 0

    if cfg.power_profile:
        build = pipe.candidate_build(bases, loops, ("clean", "energized"))
        runtime = pipe.compile_required([pipe._runtime_job(True)])[0]
        exes = {}
        for b in pipe.candidates:
            exe = pipe.link_variant(build, b, "energized", runtime, pipe.work / "exe" / f"{_safe(b)}.energy")
            if exe is not None:
                exes[b] = exe
        try:
            records = energyrep.run_energy_profile(exes, bcfg.energy_tool, cfg.input_args, pipe.runner,
                                                   pipe.work)
        except energyrep.ToolUnavailable as exc:
            raise PhaseError("energy", str(exc)) from None
        energyrep.emit_energy_csv(records, output)
        print(f"energy report: {output} ({len(records)} rows)")
        return 0

    if cfg.predict:
        if pipe.mode == "openmp":
            raise UsageError("prediction covers serial and auto-parallel builds; use profiling for --openmp")
        try:
            model = mlopt.load_model(cfg.model_path)
        except (OSError, mlopt.CorruptModel, mlopt.VersionMismatch) as exc:
            raise PhaseError("model", f"{cfg.model_path}: {exc}") from None
        if model.mode != pipe.mode:
            raise PhaseError("model", f"model was trained for {model.mode} mode, not {pipe.mode}")
        build = pipe.candidate_build(bases, loops, ("clean",))
        sets = pipe.baseline_counters(bases, loops)
        fvs = []
        for cs in sets:
            try:
                fvs.append(mlopt.normalize_pki(cs, model.schema))
            except mlopt.ZeroInstructions as exc:
                log.warning("%s; default backend kept", exc)
        plan = synthesizer.select_by_prediction(model, fvs, build.loops, pipe.default.name, pipe.usable(build))
        report_cols = pipe.candidates
        report_src = fvs
    else:
        build = pipe.candidate_build(bases, loops) if sources else Build()
        _merge_manifests(build, objects)
        table = pipe.profile(build)
        plan = synthesizer.select_by_profile(table, build.loops, pipe.default.name, pipe.usable(build))
        report_cols = sorted(set(pipe.candidates) | set(table.backends()))
        report_src = table

    exe = pipe.final_link(build, plan, output)
    report = Path(cfg.report_path or f"{output}.selection.csv")
    emit_selection_report(plan, report_src, report, report_cols)
    print(f"{exe}: {len(plan.choices)} loop nest(s) ({_summary(plan) or 'none'}); report {report}")
    return 0


def main(argv=None, runner: Runner | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        verbose = parser.parse_args(argv).verbose
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING,
                        format="mc: %(levelname)s: %(message)s")
    cfg = parse_args(argv)
    try:
        cfg.validate()
        if cfg.train:
            return run_train(cfg)
        try:
            bcfg = _load_backend_config(cfg.backend_config_path)
        except (OSError, backends.ConfigError) as exc:
            raise PhaseError("config", str(exc)) from None
        return run_pipeline(cfg, bcfg, runner)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mc: error: {exc}", file=sys.stderr)
        return 2
    except PhaseError as exc:
        print(f"mc: error [{exc.phase}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
