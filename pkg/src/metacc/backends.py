"""Candidate code optimizers: registry, config file, and compile/link invocation."""

from __future__ import annotations

import logging
import shlex
import threading
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import mock
from .extractor.outline import NEST_BEGIN, NEST_END
from .runner import Runner, SubprocessRunner

log = logging.getLogger(__name__)

KINDS = ("direct", "source_to_source", "mock")
MODES = ("serial", "parallel", "openmp", "baseline_o1")
PLACEHOLDERS = ("{input}", "{output}", "{flags}")
# flags given to the downstream compiler of a source-to-source optimizer
_DOWNSTREAM_MODE = {"serial": "serial", "parallel": "openmp", "openmp": "openmp", "baseline_o1": "serial"}


class BackendUnavailable(RuntimeError):
    pass


class CompileFailed(RuntimeError):
    pass


class LinkFailed(RuntimeError):
    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BackendSpec:
    name: str
    kind: str
    compile_template: str
    flags_serial: tuple = ()
    flags_parallel: tuple = ()   # added to flags_serial in auto-parallel mode
    flags_openmp: tuple = ()     # OpenMP enable flag(s), added to flags_serial
    link_libs: tuple = ()
    is_default: bool = False
    downstream: str | None = None
    compat: str | None = None    # OpenMP runtime compatibility group
    openmp_libs: tuple = ()
    baseline_flags: tuple = ("-O1",)
    wrap: tuple = ()             # ((flag prefix, wrapper flag), ...) e.g. (("-polly", "-mllvm"),)
    link_template: str | None = None
    profile: mock.MockProfile | None = field(default=None, compare=False)
    fail_loops: frozenset = frozenset()

    @property
    def program(self) -> str:
        return shlex.split(self.compile_template)[0]

    @property
    def supports_parallel(self) -> bool:
        return bool(self.flags_parallel)

    def supports(self, mode: str) -> bool:
        if mode == "parallel":
            return self.supports_parallel
        if mode == "openmp":
            return bool(self.flags_openmp) or self.kind == "mock"
        if mode == "baseline_o1":
            return self.is_default
        return True

    def flags_for(self, mode: str) -> list[str]:
        if mode == "serial":
            return list(self.flags_serial)
        if mode == "parallel":
            return list(self.flags_serial) + list(self.flags_parallel)
        if mode == "openmp":
            return list(self.flags_serial) + list(self.flags_openmp)
        if mode == "baseline_o1":
            return list(self.baseline_flags)
        raise ValueError(f"unknown mode {mode!r}")

    def command_flags(self, flags) -> list[str]:
        out = []
        for f in flags:
            for prefix, wrapper in self.wrap:
                if f.startswith(prefix):
                    out.append(wrapper)
                    break
            out.append(f)
        return out

    def link_libs_for(self, mode: str) -> list[str]:
        libs = list(self.link_libs)
        if mode in ("parallel", "openmp"):
            libs += list(self.openmp_libs)
        return libs


def expand(template: str, **values) -> list[str]:
    """Split a command template into argv and substitute placeholders.

    A token that is exactly ``{flags}`` (or ``{objects}``) expands to zero or more arguments.
    """
    argv = []
    for tok in shlex.split(template):
        key = tok[1:-1] if tok.startswith("{") and tok.endswith("}") else None
        if key is not None and isinstance(values.get(key), (list, tuple)):
            argv.extend(str(v) for v in values[key])
            continue
        for k, v in values.items():
            if not isinstance(v, (list, tuple)):
                tok = tok.replace("{" + k + "}", str(v))
        argv.append(tok)
    return argv


def _direct(name, template_prog, serial, parallel=(), openmp=(), **kw) -> BackendSpec:
    return BackendSpec(name, "direct", f"{template_prog} {{flags}} -c {{input}} -o {{output}}",
                       tuple(serial), tuple(parallel), tuple(openmp), **kw)


def default_registry() -> list[BackendSpec]:
    """The six candidate optimizers with their serial and auto-parallel flag rows."""
    return [
        _direct("clang", "clang", ["-Ofast", "-march=native"], openmp=["-fopenmp"],
                compat="llvm-intel", openmp_libs=("-lomp",)),
        _direct("gcc", "gcc", ["-Ofast", "-march=native"], openmp=["-fopenmp"],
                compat="gnu", openmp_libs=("-lgomp",)),
        _direct("icc", "icc", ["-Ofast", "-xHost"], ["-parallel"], ["-qopenmp"],
                compat="llvm-intel", openmp_libs=("-liomp5",), is_default=True),
        _direct("pgcc", "pgcc", ["-fast", "-tp=skylake", "-Mllvm"], ["-Mconcur"], ["-mp"],
                compat="pgi"),
        BackendSpec("pluto", "source_to_source", "polycc {input} {flags} -o {output}",
                    ("--tile",), ("--parallel",), downstream="icc"),
        _direct("polly", "clang",
                ["-O3", "-march=native", "-polly", "-polly-tiling", "-polly-vectorizer=stripmine"],
                ["-polly-parallel"], ["-fopenmp"], compat="llvm-intel", openmp_libs=("-lomp",),
                wrap=(("-polly", "-mllvm"),)),
    ]


class Registry(Mapping):
    """Name -> BackendSpec with the registry invariants checked."""

    def __init__(self, specs):
        self._specs: dict[str, BackendSpec] = {}
        for s in specs:
            self._specs[s.name] = s
        self.validate()

    def validate(self) -> None:
        defaults = [s.name for s in self._specs.values() if s.is_default]
        if len(defaults) != 1:
            raise ConfigError(f"exactly one default backend required, found {defaults or 'none'}")
        for s in self._specs.values():
            if s.kind not in KINDS:
                raise ConfigError(f"{s.name}: unknown kind {s.kind!r}")
            missing = [p for p in PLACEHOLDERS if p not in s.compile_template]
            if missing:
                raise ConfigError(f"{s.name}: template lacks {', '.join(missing)}")
            if s.kind == "source_to_source":
                down = self._specs.get(s.downstream or "")
                if down is None or down.kind == "source_to_source":
                    raise ConfigError(f"{s.name}: downstream backend {s.downstream!r} is not a compiler")
            if s.kind == "mock" and s.profile is None:
                raise ConfigError(f"{s.name}: mock backend needs a timing profile")

    def __getitem__(self, name: str) -> BackendSpec:
        return self._specs[name]

    def __iter__(self):
        return iter(self._specs)

    def __len__(self) -> int:
        return len(self._specs)

    @property
    def default(self) -> BackendSpec:
        return next(s for s in self._specs.values() if s.is_default)

    def candidates(self, mode: str) -> list[BackendSpec]:
        return [s for s in self._specs.values() if s.supports(mode)]


# -- config file ---------------------------------------------------------

@dataclass
class BackendConfig:
    registry: Registry
    counter_provider: str | None = None
    energy_tool: str | None = None
    energy_flags: tuple = ("-DMC_ENERGY_PERFMON",)
    preprocessor: tuple = ("cc", "-E")


def _flag_groups(text: str) -> tuple[tuple, tuple, tuple]:
    groups = [tuple(shlex.split(g)) for g in text.split("|")]
    while len(groups) < 3:
        groups.append(())
    if len(groups) > 3:
        raise ConfigError(f"too many flag groups in {text!r}")
    return groups[0], groups[1], groups[2]


def parse_config(text: str, base=None) -> BackendConfig:
    """Parse a backend config, layered over ``base`` (default: the Table-1 registry).

    Entry lines: name, kind, template, serial|parallel|openmp flags, link libs (tab-separated).
    Lines starting with ``%`` are directives; ``#`` starts a comment line.
    """
    specs = {s.name: s for s in (default_registry() if base is None else base)}
    cfg = {"counter_provider": None, "energy_tool": None,
           "energy_flags": ("-DMC_ENERGY_PERFMON",), "preprocessor": ("cc", "-E")}
    default_name = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            if line.startswith("%"):
                word, _, rest = line[1:].partition(" ")
                rest = rest.strip()
                if word == "reset":
                    specs.clear()
                elif word == "remove":
                    specs.pop(rest, None)
                elif word == "default":
                    default_name = rest
                elif word in ("counter_provider", "energy_tool"):
                    cfg[word] = rest
                elif word in ("energy_flags", "preprocessor"):
                    cfg[word] = tuple(shlex.split(rest))
                else:
                    name, _, value = rest.partition(" ")
                    s = specs[name]
                    value = value.strip()
                    if word == "downstream":
                        s = replace(s, downstream=value)
                    elif word == "compat":
                        s = replace(s, compat=value or None)
                    elif word == "baseline":
                        s = replace(s, baseline_flags=tuple(shlex.split(value)))
                    elif word == "openmp_libs":
                        s = replace(s, openmp_libs=tuple(shlex.split(value)))
                    elif word == "profile":
                        s = replace(s, profile=mock.MockProfile.parse(value))
                    elif word == "fail":
                        s = replace(s, fail_loops=frozenset(value.split()))
                    elif word == "link":
                        s = replace(s, link_template=value)
                    elif word == "wrap":
                        prefix, wrapper = value.split()
                        s = replace(s, wrap=s.wrap + ((prefix, wrapper),))
                    else:
                        raise ConfigError(f"unknown directive %{word}")
                    specs[name] = s
                continue
            cols = line.split("\t")
            if len(cols) < 3 or len(cols) > 5:
                raise ConfigError("expected name, kind, template[, flags[, link libs]]")
            cols += [""] * (5 - len(cols))
            name, kind, template, flags, libs = (c.strip() for c in cols)
            serial, parallel, openmp = _flag_groups(flags)
            old = specs.get(name)
            spec = BackendSpec(name, kind, template, serial, parallel, openmp, tuple(shlex.split(libs)),
                               is_default=old.is_default if old else False,
                               downstream=old.downstream if old else None,
                               compat=old.compat if old else None,
                               openmp_libs=old.openmp_libs if old else (),
                               profile=old.profile if old else None)
            if kind == "mock" and spec.profile is None:
                spec = replace(spec, profile=mock.MockProfile())
            specs[name] = spec
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if default_name is not None:
        if default_name not in specs:
            raise ConfigError(f"%default names unknown backend {default_name!r}")
        specs = {n: replace(s, is_default=(n == default_name)) for n, s in specs.items()}
    return BackendConfig(Registry(specs.values()), cfg["counter_provider"], cfg["energy_tool"],
                         cfg["energy_flags"], cfg["preprocessor"])


def load_config(path) -> BackendConfig:
    return parse_config(Path(path).read_text())


# -- compile -------------------------------------------------------------

@dataclass(frozen=True)
class CompileJob:
    backend: str
    mode: str
    source_path: Path
    object_path: Path
    loop_id: str | None = None
    variant: str = "clean"       # clean | timed | energized | base | runtime
    extra_flags: tuple = ()       # -I/-D forwarded from the command line


@dataclass
class CompileResult:
    job: CompileJob
    status: str                   # ok | failed
    diagnostics: str = ""
    object_path: Path | None = None
    error: str | None = None      # unavailable | failed

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _scop_source(src: Path, dest: Path) -> Path:
    text = src.read_text().replace(NEST_BEGIN, "#pragma scop").replace(NEST_END, "#pragma endscop")
    dest.write_text(text)
    return dest


def compile(job: CompileJob, spec: BackendSpec, registry: Registry | None = None,
            runner: Runner | None = None, ledger: Path | None = None) -> CompileResult:
    """Compile one source with one backend.  Raises BackendUnavailable; failures are results."""
    runner = runner or SubprocessRunner()
    if job.mode == "baseline_o1" and not spec.is_default:
        raise ValueError("baseline_o1 builds use the default backend only")
    obj = Path(job.object_path)
    obj.parent.mkdir(parents=True, exist_ok=True)
    if spec.kind == "mock":
        if job.loop_id is not None and (job.loop_id in spec.fail_loops or "*" in spec.fail_loops):
            return CompileResult(job, "failed", f"{spec.name}: simulated failure on {job.loop_id}",
                                 error="failed")
        mock.compile_stub(spec.name, spec.profile, job.mode, job.loop_id, job.variant,
                          job.extra_flags, Path(job.source_path), obj, ledger)
        return CompileResult(job, "ok", "", obj)
    if spec.kind == "source_to_source":
        if registry is None:
            raise ValueError(f"{spec.name} needs the registry to find {spec.downstream}")
        down = registry[spec.downstream]
        scop = _scop_source(Path(job.source_path), obj.with_suffix(".scop.c"))
        transformed = obj.with_suffix(f".{spec.name}.c")
        argv = expand(spec.compile_template, input=scop, output=transformed,
                      flags=spec.command_flags(spec.flags_for("parallel" if job.mode == "parallel" else "serial")))
        if not runner.available(argv[0]):
            raise BackendUnavailable(f"{spec.name}: {argv[0]} not found")
        p = runner.run(argv)
        if p.returncode != 0 or not transformed.exists():
            return CompileResult(job, "failed", p.stderr or p.stdout, error="failed")
        sub = replace(job, backend=down.name, mode=_DOWNSTREAM_MODE[job.mode], source_path=transformed)
        res = compile(sub, down, registry, runner, ledger)
        return CompileResult(job, res.status, res.diagnostics, res.object_path, res.error)
    argv = expand(spec.compile_template, input=job.source_path, output=obj,
                  flags=spec.command_flags(spec.flags_for(job.mode)) + list(job.extra_flags))
    if not runner.available(argv[0]):
        raise BackendUnavailable(f"{spec.name}: {argv[0]} not found")
    p = runner.run(argv)
    if p.returncode != 0 or not obj.exists():
        return CompileResult(job, "failed", (p.stderr or p.stdout).strip(), error="failed")
    return CompileResult(job, "ok", p.stderr.strip(), obj)


def compile_all(jobs: list[CompileJob], pool_size: int, registry: Registry,
                runner: Runner | None = None, ledger: Path | None = None) -> list[CompileResult]:
    """Run jobs on at most ``pool_size`` workers; results keep job order."""
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    runner = runner or SubprocessRunner()
    warned: set = set()
    lock = threading.Lock()

    def one(job: CompileJob) -> CompileResult:
        spec = registry[job.backend]
        try:
            return compile(job, spec, registry, runner, ledger)
        except BackendUnavailable as exc:
            with lock:
                first = job.backend not in warned
                warned.add(job.backend)
            if first:
                log.warning("%s; excluding it", exc)
            return CompileResult(job, "failed", str(exc), error="unavailable")

    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        return list(pool.map(one, jobs))


def link(spec: BackendSpec, objects, output: Path, flags=(), runner: Runner | None = None) -> Path:
    """Link ``objects`` with the default backend's driver."""
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    if spec.kind == "mock":
        mock.link(objects, output)
        return output
    runner = runner or SubprocessRunner()
    template = spec.link_template or f"{shlex.quote(spec.program)} {{objects}} -o {{output}} {{flags}}"
    argv = expand(template, objects=[str(o) for o in objects], output=output, flags=list(flags))
    if not runner.available(argv[0]):
        raise LinkFailed(f"linker {argv[0]} not found")
    p = runner.run(argv)
    if p.returncode != 0:
        raise LinkFailed(f"link of {output.name} failed", (p.stderr or p.stdout).strip())
    return output
