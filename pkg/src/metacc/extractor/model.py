from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..cparse.ast import AstNode, SourceSpan
from ..cparse.symbols import SymbolInfo

REASONS = (
    "has_return", "has_goto", "has_label", "has_case_label", "uses_static_fn",
    "uses_static_var", "unsupported_construct", "uses_func_name", "unknown_symbol",
    "threadprivate", "register_var", "local_type", "has_directive",
    "conditional_context", "below_min_lines", "extraction_fault",
)


class ExtractionFault(Exception):
    """The loop file for a nest cannot be generated; the nest is demoted."""


@dataclass
class LoopNest:
    loop_id: str
    span: SourceSpan
    enclosing_fn: str
    symbols: list[SymbolInfo] = field(default_factory=list)
    eligible: bool = True
    ineligibility_reasons: list[str] = field(default_factory=list)
    omp_pragma: str | None = None
    # where the nest sits in the unit; not part of the identity
    root: AstNode | None = field(default=None, repr=False, compare=False)
    pragmas: list[AstNode] = field(default_factory=list, repr=False, compare=False)
    ordinal: int = 0
    in_omp_region: bool = False
    symbol_error: str | None = field(default=None, repr=False)

    @property
    def region_start(self) -> int:
        """Byte offset where the replaced text starts (first attached pragma or the for)."""
        if self.pragmas:
            return self.pragmas[0].span.byte_start
        return self.span.byte_start

    def demote(self, reason: str) -> None:
        if reason not in self.ineligibility_reasons:
            self.ineligibility_reasons.append(reason)
        self.eligible = False


@dataclass
class Param:
    name: str        # variable name in the original scope
    type_text: str   # type of the reference parameter, e.g. "int *"
    by_ref: bool = True
    c_name: str = ""  # identifier used inside the loop function
    decl: str = ""    # parameter declaration as written in the prototype


@dataclass
class ExtractedFunctionSig:
    fn_name: str
    params: list[Param]
    localized: list[str]
    indirect: list[str] = field(default_factory=list)  # accessed via #define name (*name_ref)

    @property
    def prototype(self) -> str:
        args = ", ".join(p.decl for p in self.params) or "void"
        return f"void {self.fn_name}({args})"

    @property
    def call(self) -> str:
        return f"{self.fn_name}({', '.join('&' + p.name for p in self.params)});"


@dataclass
class LoopFiles:
    clean: str
    timed: str
    energized: str


@dataclass
class GeneratedArtifacts:
    base_file: dict[Path, str] = field(default_factory=dict)
    loop_files: dict[str, LoopFiles] = field(default_factory=dict)
    extern_decls: dict[Path, list[str]] = field(default_factory=dict)
