"""Names declared by system and project headers.

The extractor parses raw (unexpanded) source so generated files keep the
original macros and includes.  To resolve identifiers that come from
headers it preprocesses the file once with the host compiler and harvests
the declarations that line markers attribute to other files.
"""

from __future__ import annotations

import logging
import re
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

_LINEMARK = re.compile(r'#\s*(?:line\s+)?\d+\s+"((?:[^"\\]|\\.)*)"')
_DEFINE = re.compile(r"#\s*define\s+([A-Za-z_]\w*)")


@dataclass
class HeaderInfo:
    functions: set = field(default_factory=set)
    globals: dict = field(default_factory=dict)  # name -> (type text, is_primitive)
    typedefs: dict = field(default_factory=dict)  # name -> is arithmetic
    enum_constants: set = field(default_factory=set)
    macros: set = field(default_factory=set)

    def merge(self, other: "HeaderInfo") -> "HeaderInfo":
        return HeaderInfo(
            self.functions | other.functions,
            {**self.globals, **other.globals},
            {**self.typedefs, **other.typedefs},
            self.enum_constants | other.enum_constants,
            self.macros | other.macros,
        )


def harvest(preprocessed: str, main_file: str | None) -> HeaderInfo:
    """Collect declarations in ``preprocessed`` that do not belong to ``main_file``."""
    from .parser import parse_unit
    from .symbols import Resolver

    info = HeaderInfo()
    unit = parse_unit(preprocessed, "<preprocessed>", known_typedefs=())
    resolver = Resolver(unit)
    current = None
    main_name = Path(main_file).name if main_file else None
    for item in unit.children:
        if item.kind == "Other" and item.attrs.get("directive") == "line":
            m = _LINEMARK.match(item.text)
            if m:
                current = m.group(1)
            continue
        if current is not None and main_name is not None and Path(current).name == main_name:
            continue
        if item.kind == "FunctionDef":
            info.functions.add(item.attrs["name"])
            continue
        if item.kind != "Declaration" or item.attrs.get("spec") is None:
            continue
        spec = item.attrs["spec"]
        info.enum_constants.update(spec.enumerators)
        for d in item.attrs["declarators"]:
            if not d.name:
                continue
            if spec.is_typedef:
                derived = [t for t in resolver.derived_tokens(d) if t != "\0"]
                info.typedefs[d.name] = not derived and resolver.is_arith_spec(spec, item.span.byte_start)
            elif d.is_function:
                info.functions.add(d.name)
            else:
                info.globals[d.name] = (
                    resolver.type_text(spec, d),
                    resolver.primitive(spec, d, item.span.byte_start),
                )
    return info


def scan_headers(source: Path, cpp: list[str], include_dirs=(), defines=()) -> HeaderInfo:
    """Preprocess ``source`` with ``cpp`` (e.g. ``["cc", "-E"]``) and harvest header names.

    Returns an empty HeaderInfo when the preprocessor is unavailable or fails.
    """
    flags = [f"-I{d}" for d in include_dirs] + [f"-D{d}" for d in defines]
    try:
        pre = subprocess.run([*cpp, *flags, str(source)], capture_output=True, text=True, check=False)
        macros = subprocess.run([*cpp, "-dM", *flags, str(source)], capture_output=True, text=True, check=False)
    except OSError as exc:
        log.warning("preprocessor unavailable (%s); header symbols unknown", exc)
        return HeaderInfo()
    if pre.returncode != 0:
        log.warning("preprocessing %s failed: %s", source, pre.stderr.strip()[:500])
        return HeaderInfo()
    try:
        info = harvest(pre.stdout, str(source))
    except ValueError as exc:
        log.warning("could not parse preprocessed %s: %s", source, exc)
        info = HeaderInfo()
    info.macros = {m.group(1) for m in map(_DEFINE.match, macros.stdout.splitlines()) if m}
    return info
