"""OpenMP pragma clause sanitizing for outlined loops."""

from __future__ import annotations

import re

DATA_CLAUSES = frozenset({
    "private", "firstprivate", "lastprivate", "shared", "copyin", "copyprivate",
    "reduction", "linear", "aligned", "nontemporal", "in_reduction", "task_reduction",
})
# clauses whose list may name a variable that is only reachable through a pointer
_DROP_WHEN_INDIRECT = frozenset({"shared"})
_IDENT = re.compile(r"[A-Za-z_]\w*")


class ClauseConflict(ValueError):
    """A data clause names a variable that the outlined function accesses indirectly."""


def is_omp(text: str) -> bool:
    return re.match(r"#\s*pragma\s+omp\b", text) is not None


def _split(body: str):
    """Yield (word, args-or-None) for each directive word / clause."""
    i = 0
    n = len(body)
    while i < n:
        if body[i] in " \t,\n":
            i += 1
            continue
        m = _IDENT.match(body, i)
        if not m:
            yield body[i:], None
            return
        word = m.group(0)
        i = m.end()
        j = i
        while j < n and body[j] in " \t":
            j += 1
        if j < n and body[j] == "(":
            depth = 0
            k = j
            while k < n:
                if body[k] == "(":
                    depth += 1
                elif body[k] == ")":
                    depth -= 1
                    if depth == 0:
                        break
                k += 1
            yield word, body[j + 1:k]
            i = k + 1
        else:
            yield word, None


def _split_list(args: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in args:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur).strip())
    return out


def clause_expression_names(text: str) -> set[str]:
    """Identifiers used in the expression clauses of an omp pragma (num_threads, if, ...)."""
    if not is_omp(text):
        return set()
    body = re.sub(r"\\\r?\n", " ", text)
    body = re.sub(r"^#\s*pragma\s+omp\s*", "", body)
    names = set()
    for word, args in _split(body):
        if args is None or word in DATA_CLAUSES or word in ("default", "proc_bind", "map", "depend"):
            continue
        if word == "schedule" or word == "dist_schedule":
            args = ",".join(_split_list(args)[1:])
        names.update(_IDENT.findall(args))
    return names


def sanitize(text: str, present: set[str], indirect: set[str]) -> str:
    """Drop data-clause variables not in ``present``.

    Variables in ``indirect`` are reached through a pointer in the outlined
    function: they are dropped from ``shared`` lists and cause a
    ClauseConflict anywhere else.  ``default(none)`` is removed because the
    outlined function's reference parameters are never listed.
    """
    if not is_omp(text):
        return text
    body = re.sub(r"\\\r?\n", " ", text)
    head = re.match(r"#\s*pragma\s+omp\s*", body)
    parts = []
    for word, args in _split(body[head.end():]):
        if args is None:
            parts.append(word)
            continue
        if word == "default" and args.strip() == "none":
            continue
        if word not in DATA_CLAUSES:
            parts.append(f"{word}({args})")
            continue
        prefix, items, suffix = "", args, ""
        if word in ("reduction", "in_reduction", "task_reduction") and ":" in args:
            prefix, items = args.split(":", 1)
            prefix += ":"
        elif word in ("linear", "aligned") and ":" in args:
            items, suffix = args.split(":", 1)
            suffix = ":" + suffix
        kept = []
        for item in _split_list(items):
            m = _IDENT.match(item)
            base = m.group(0) if m else item
            if base in indirect:
                if word in _DROP_WHEN_INDIRECT:
                    continue
                raise ClauseConflict(f"{word}({base}) on a variable accessed by reference")
            if base in present:
                kept.append(item)
        if kept:
            parts.append(f"{word}({prefix}{', '.join(kept)}{suffix})")
    return "#pragma omp " + " ".join(parts)


def data_clause_names(text: str, clauses=DATA_CLAUSES) -> set[str]:
    """Variable names listed in the given data clauses of an omp pragma."""
    if not is_omp(text):
        return set()
    body = re.sub(r"\\\r?\n", " ", text)
    body = re.sub(r"^#\s*pragma\s+omp\s*", "", body)
    names = set()
    for word, args in _split(body):
        if args is None or word not in clauses:
            continue
        if ":" in args and word in ("reduction", "in_reduction", "task_reduction"):
            args = args.split(":", 1)[1]
        elif ":" in args and word in ("linear", "aligned"):
            args = args.split(":", 1)[0]
        for item in _split_list(args):
            m = _IDENT.match(item)
            if m:
                names.add(m.group(0))
    return names


def directive_words(text: str) -> list[str]:
    """The construct words of an omp pragma, e.g. ['parallel', 'for']."""
    if not is_omp(text):
        return []
    body = re.sub(r"\\\r?\n", " ", text)
    body = re.sub(r"^#\s*pragma\s+omp\s*", "", body)
    words = []
    for word, args in _split(body):
        if word not in _CONSTRUCT_WORDS:
            break
        words.append(word)
        if args is not None:  # critical(name), threadprivate(list)
            break
    return words


_CONSTRUCT_WORDS = frozenset({
    "parallel", "for", "simd", "do", "sections", "section", "single", "master",
    "masked", "critical", "task", "taskloop", "taskwait", "barrier", "atomic",
    "ordered", "teams", "distribute", "target", "loop", "declare", "threadprivate",
    "flush", "taskgroup", "scope",
})
