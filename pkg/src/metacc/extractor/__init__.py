"""Loop-nest outlining into standalone loop files plus a rewritten base file."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..cparse import parse_unit
from ..cparse.ast import AstNode
from ..cparse.headers import HeaderInfo
from .instrument import instrument_energy, instrument_timing
from .model import (
    REASONS, ExtractedFunctionSig, ExtractionFault, GeneratedArtifacts, LoopFiles, LoopNest, Param,
)
from .outline import (
    NEST_BEGIN, NEST_END, analyze_unit, check_eligibility, extern_prototypes, extract_loop,
    nest_symbols, rewrite_base,
)

log = logging.getLogger(__name__)

__all__ = [
    "REASONS", "ExtractedFunctionSig", "ExtractionFault", "GeneratedArtifacts", "LoopFiles",
    "LoopNest", "Param", "NEST_BEGIN", "NEST_END", "SourceResult", "analyze_unit",
    "check_eligibility", "extract_loop", "extract_sources", "instrument_energy",
    "instrument_timing", "nest_symbols", "rebuild_base", "rewrite_base",
]


@dataclass
class SourceResult:
    path: Path
    unit: AstNode
    nests: list[LoopNest]
    sigs: dict[str, ExtractedFunctionSig] = field(default_factory=dict)

    def eligible_sigs(self) -> list[ExtractedFunctionSig]:
        return [self.sigs[n.loop_id] for n in self.nests if n.eligible]


def rebuild_base(src: SourceResult) -> str:
    """Base text for the current eligibility (after any demotions)."""
    return rewrite_base(src.unit, src.nests, src.eligible_sigs())


def extract_sources(paths, headers: Callable[[Path], HeaderInfo] | None = None,
                    min_loop_lines: int = 1) -> tuple[GeneratedArtifacts, list[SourceResult]]:
    """Analyze and outline every nest of every source file.

    Nests whose loop file cannot be produced are demoted with
    ``extraction_fault`` and left in place.
    """
    arts = GeneratedArtifacts()
    results = []
    taken: set = set()
    for path in map(Path, paths):
        unit = parse_unit(path.read_text(), str(path))
        info = headers(path) if headers else None
        nests = analyze_unit(unit, path.stem, info, min_loop_lines, taken)
        res = SourceResult(path, unit, nests)
        for nest in nests:
            if not nest.eligible:
                continue
            try:
                clean, sig = extract_loop(nest, unit, info, origin=path.name)
            except ExtractionFault as exc:
                log.info("%s: %s", nest.loop_id, exc)
                nest.demote("extraction_fault")
                continue
            res.sigs[nest.loop_id] = sig
            arts.loop_files[nest.loop_id] = LoopFiles(
                clean, instrument_timing(clean, nest.loop_id), instrument_energy(clean, nest.loop_id))
        arts.base_file[path] = rebuild_base(res)
        arts.extern_decls[path] = extern_prototypes(res.eligible_sigs())
        results.append(res)
    return arts, results
