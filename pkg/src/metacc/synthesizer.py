"""Per-loop backend selection, link plans, and the final link."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import backends
from .mlopt import ForestModel, FeatureVector, predict
from .profiler import TimingTable, median_ns
from .runner import Runner

log = logging.getLogger(__name__)

REASONS = ("profiled", "predicted", "default_fallback")
MANIFEST_BASE = "-"


@dataclass(frozen=True)
class Choice:
    backend: str
    reason: str
    note: str = ""   # why a profiled or predicted choice was overridden, if it was


@dataclass
class SelectionPlan:
    choices: dict = field(default_factory=dict)   # loop_id -> Choice
    default_backend: str = ""

    def counts(self) -> dict[str, int]:
        out = {r: 0 for r in REASONS}
        for c in self.choices.values():
            out[c.reason] += 1
        return out


def _pick(medians: dict, default: str) -> str:
    best = min(medians.values())
    tied = sorted(b for b, ns in medians.items() if ns == best)
    return default if default in tied else tied[0]


def select_by_profile(table: TimingTable, loops, default_backend: str,
                      usable=None) -> SelectionPlan:
    """Fastest median per loop; loops that never ran keep the default backend.

    ``usable(loop_id, backend)`` can veto backends, e.g. when the clean build failed.
    """
    plan = SelectionPlan(default_backend=default_backend)
    for loop_id in loops:
        medians = {b: median_ns(s) for (lp, b), s in table.entries.items()
                   if lp == loop_id and s and (usable is None or usable(loop_id, b))}
        if medians:
            plan.choices[loop_id] = Choice(_pick(medians, default_backend), "profiled")
        else:
            plan.choices[loop_id] = Choice(default_backend, "default_fallback")
    return plan


def select_by_prediction(model: ForestModel, fvs, loops, default_backend: str,
                         usable=None) -> SelectionPlan:
    """Model vote per loop with counters; the rest keep the default backend."""
    by_loop: dict[str, FeatureVector] = {fv.loop_id: fv for fv in fvs}
    plan = SelectionPlan(default_backend=default_backend)
    for loop_id in loops:
        fv = by_loop.get(loop_id)
        if fv is None:
            plan.choices[loop_id] = Choice(default_backend, "default_fallback")
            continue
        backend = predict(model, fv)
        if usable is not None and not usable(loop_id, backend):
            log.warning("%s: predicted %s has no object; using %s", loop_id, backend, default_backend)
            plan.choices[loop_id] = Choice(default_backend, "predicted", f"unavailable:{backend}")
        else:
            plan.choices[loop_id] = Choice(backend, "predicted")
    return plan


def runtime_group(spec: backends.BackendSpec, registry) -> str | None:
    if spec.kind == "source_to_source" and spec.downstream in registry:
        return registry[spec.downstream].compat
    return spec.compat


def apply_runtime_compat(plan: SelectionPlan, registry, mode: str) -> list[str]:
    """Demote choices whose threading runtime cannot be mixed with the default's."""
    if mode not in ("openmp", "parallel"):
        return []
    default = registry[plan.default_backend]
    want = runtime_group(default, registry)
    demoted = []
    for loop_id, c in sorted(plan.choices.items()):
        if c.backend == plan.default_backend:
            continue
        group = runtime_group(registry[c.backend], registry)
        if want and group and group != want:
            log.warning("%s: %s uses a threading runtime incompatible with %s; using %s",
                        loop_id, c.backend, default.name, default.name)
            plan.choices[loop_id] = Choice(default.name, c.reason, f"demoted:{c.backend}")
            demoted.append(loop_id)
    return demoted


@dataclass
class LinkPlan:
    objects: list
    libs: list
    output_path: Path


def _dedup(items) -> list:
    seen, out = set(), []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def build_link_plan(plan: SelectionPlan, loop_objects: dict, base_objects, registry, mode: str,
                    output_path, user_link_flags=()) -> LinkPlan:
    """``loop_objects`` maps (loop_id, backend) to the clean object of that build."""
    objects = []
    for loop_id in sorted(plan.choices):
        c = plan.choices[loop_id]
        obj = loop_objects.get((loop_id, c.backend))
        if obj is None:
            raise backends.LinkFailed(f"no {c.backend} object for {loop_id}")
        objects.append(Path(obj))
    objects += [Path(o) for o in base_objects]
    chosen = _dedup([plan.default_backend] + [plan.choices[lp].backend for lp in sorted(plan.choices)])
    libs = []
    for name in chosen:
        spec = registry[name]
        libs += spec.link_libs_for(mode)
        if spec.kind == "source_to_source" and spec.downstream in registry:
            libs += registry[spec.downstream].link_libs_for(backends._DOWNSTREAM_MODE[mode])
    return LinkPlan(objects, _dedup(libs + list(user_link_flags)), Path(output_path))


def default_link_flags(spec: backends.BackendSpec, mode: str) -> list[str]:
    """Driver flags the default compiler needs to pull in its own threading runtime."""
    if mode == "parallel":
        return list(spec.flags_parallel)
    if mode == "openmp":
        return list(spec.flags_openmp)
    return []


def link(lp: LinkPlan, registry, mode: str = "serial", runner: Runner | None = None) -> Path:
    default = registry.default
    flags = default.command_flags(default_link_flags(default, mode)) + list(lp.libs)
    return backends.link(default, lp.objects, lp.output_path, flags, runner)


# -- compile-only manifests ----------------------------------------------

@dataclass(frozen=True)
class ManifestRow:
    loop_id: str
    backend: str
    object_path: str
    variant: str


def format_manifest(rows) -> str:
    return "".join(f"{r.loop_id}\t{r.backend}\t{r.object_path}\t{r.variant}\n" for r in rows)


def parse_manifest(text: str) -> list[ManifestRow]:
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 4 or not all(parts):
            raise ValueError(f"manifest line {n}: expected 4 tab-separated fields")
        rows.append(ManifestRow(*parts))
    return rows


def manifest_path(obj) -> Path:
    obj = Path(obj)
    return obj.with_name(obj.name + ".mcm")
