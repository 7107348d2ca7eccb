"""Tokenizer for the C subset.

Every token keeps the whitespace and comments that precede it (``lead``), so
concatenating ``lead + text`` over the token stream reproduces the input
exactly.  Preprocessor lines are kept whole as single ``dir`` tokens.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass

KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Alignas _Alignof _Atomic _Bool _Complex _Generic _Imaginary _Noreturn
    _Static_assert _Thread_local
    __restrict __restrict__ __inline __inline__ __const __volatile__ __signed__
    __extension__ __attribute__ __attribute __asm__ __asm asm __thread
    __typeof__ __typeof typeof __declspec __int128 __float128
    _Float16 _Float32 _Float64 _Float128 _Float32x _Float64x
    __builtin_va_list __label__ __alignof__ __real__ __imag__
""".split())

_PUNCT = sorted("""
    ... <<= >>= -> ++ -- << >> <= >= == != && || *= /= %= += -= &= ^= |= ##
    [ ] ( ) { } . & * + - ~ ! / % < > ^ | ? : ; = , #
""".split(), key=len, reverse=True)
_PUNCT_RE = re.compile("|".join(re.escape(p) for p in _PUNCT))
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUMBER_RE = re.compile(r"\.?[0-9](?:[eEpP][+-]|[A-Za-z0-9_.])*")
_STRING_RE = re.compile(r'(?:u8|[uUL])?"(?:[^"\\\n]|\\.)*"', re.S)
_CHAR_RE = re.compile(r"(?:u8|[uUL])?'(?:[^'\\\n]|\\.)*'", re.S)


class LexError(ValueError):
    pass


@dataclass(slots=True)
class Token:
    kind: str  # id, kw, num, str, chr, op, dir, other, eof
    text: str
    start: int
    end: int
    line: int
    end_line: int
    lead: str = ""

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}@{self.start})"

    @property
    def directive(self) -> str:
        """Directive name for ``dir`` tokens ('include', 'pragma', ...)."""
        if self.kind != "dir":
            return ""
        m = re.match(r"#\s*([A-Za-z_]\w*|\d+)", self.text)
        if not m:
            return ""
        return "line" if m.group(1).isdigit() else m.group(1)


def _skip_trivia(src: str, i: int) -> int:
    n = len(src)
    while i < n:
        c = src[i]
        if c in " \t\r\n\f\v":
            i += 1
        elif c == "\\" and src.startswith("\n", i + 1):
            i += 2
        elif src.startswith("//", i):
            j = src.find("\n", i)
            i = n if j < 0 else j
        elif src.startswith("/*", i):
            j = src.find("*/", i + 2)
            if j < 0:
                raise LexError(f"unterminated comment at offset {i}")
            i = j + 2
        else:
            break
    return i


def _directive_end(src: str, i: int) -> int:
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            return i
        if c == "\\" and src.startswith("\n", i + 1):
            i += 2
        elif c == "\\" and src.startswith("\r\n", i + 1):
            i += 3
        elif src.startswith("/*", i):
            j = src.find("*/", i + 2)
            if j < 0:
                raise LexError(f"unterminated comment at offset {i}")
            i = j + 2
        elif src.startswith("//", i):
            j = src.find("\n", i)
            return n if j < 0 else j
        elif c in "\"'":
            m = (_STRING_RE if c == '"' else _CHAR_RE).match(src, i)
            i = m.end() if m else i + 1
        else:
            i += 1
    return n


def tokenize(src: str) -> list[Token]:
    """Split ``src`` into tokens; the final token has kind ``eof``."""
    line_starts = [0] + [m.end() for m in re.finditer("\n", src)]

    def line_of(off: int) -> int:
        return bisect.bisect_right(line_starts, off)

    toks: list[Token] = []
    i = 0
    n = len(src)
    last_end = 0
    while True:
        j = _skip_trivia(src, i)
        lead = src[i:j]
        i = j
        if i >= n:
            ln = line_of(n)
            toks.append(Token("eof", "", n, n, ln, ln, lead))
            return toks
        c = src[i]
        if c == "#" and (not toks or "\n" in src[last_end:i]):
            end = _directive_end(src, i)
            kind, text = "dir", src[i:end]
        elif c.isalpha() or c in "_$":
            m = _STRING_RE.match(src, i) or _CHAR_RE.match(src, i)
            if m and src[i] in "uUL":
                kind = "str" if m.group(0).endswith('"') else "chr"
                text = m.group(0)
            else:
                text = _IDENT_RE.match(src, i).group(0)
                kind = "kw" if text in KEYWORDS else "id"
        elif c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            text, kind = _NUMBER_RE.match(src, i).group(0), "num"
        elif c == '"':
            m = _STRING_RE.match(src, i)
            if not m:
                raise LexError(f"unterminated string at line {line_of(i)}")
            text, kind = m.group(0), "str"
        elif c == "'":
            m = _CHAR_RE.match(src, i)
            if not m:
                raise LexError(f"unterminated character constant at line {line_of(i)}")
            text, kind = m.group(0), "chr"
        else:
            m = _PUNCT_RE.match(src, i)
            text, kind = (m.group(0), "op") if m else (c, "other")
        end = i + len(text)
        toks.append(Token(kind, text, i, end, line_of(i), line_of(max(end - 1, i)), lead))
        i = last_end = end


def untokenize(tokens: list[Token]) -> str:
    return "".join(t.lead + t.text for t in tokens)


_WORDY = re.compile(r"[A-Za-z0-9_$]")


def join_tokens(texts) -> str:
    """Join token texts into compact, readable C (``double (*)[N]``)."""
    out: list[str] = []
    prev = ""
    for t in texts:
        if prev:
            if _WORDY.match(prev[-1]) and (_WORDY.match(t[0]) or t[0] in "*(&\"'"):
                out.append(" ")
            elif prev in (",", ";"):
                out.append(" ")
            elif prev[-1] == ")" and _WORDY.match(t[0]):
                out.append(" ")
            elif prev == "*" and _WORDY.match(t[0]) and t in KEYWORDS:
                out.append(" ")
            elif t in ("=", "+=", "-=", "*=", "/=") or prev in ("=", "+=", "-=", "*=", "/="):
                out.append(" ")
        out.append(t)
        prev = t
    return "".join(out)
