"""Token-level fallback for sources the structural parser rejects.

Handles the damage seen in real droppers and copied samples: string literals
hard-wrapped across lines, stray indentation, unclosed brackets at EOF.
The scanner never raises. It produces the same event types as the
structural path, with less certainty about spans and values.
"""

from __future__ import annotations

import ast
import keyword
import re
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Optional

from malind.syntax import (
    EXCERPT_LIMIT,
    HOOK_BASES,
    ArgKind,
    ArgValue,
    Enclosing,
    EventKind,
    SyntaxEvent,
)

MAX_STRING_CONTINUATION = 12

_STMT_KEYWORDS = (
    "if", "elif", "else", "try", "except", "finally", "for", "while", "with", "def", "class",
    "return", "import", "from", "raise", "pass", "break", "continue", "async", "await",
    "yield", "del", "global", "nonlocal", "assert", "print", "lambda",
)
_KEYWORD_START = re.compile(r"(%s)\b" % "|".join(_STMT_KEYWORDS))
_STATEMENT_START = re.compile(r"[A-Za-z_][\w.]*\s*(=|\(|\[|:|\+=|-=)")
_RECOVERY_START = re.compile(r"(def|class|import|from|if|for|while|try|with|return)\b")
_STRING_PREFIX = re.compile(r"^(?:[rRbBuUfF]{1,2})$")
_NAME_CHARS = re.compile(r"[A-Za-z_0-9]")
_OPERATORS = sorted(
    [
        "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "**", "//", "<<", ">>",
        "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    ],
    key=len,
    reverse=True,
)


def _literal(text: str) -> Any:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ast.literal_eval(text)


@dataclass
class Tok:
    kind: str  # NAME, NUMBER, STRING, OP, NEWLINE
    text: str
    line: int
    col: int
    end_line: int
    end_col: int
    value: Optional[str] = None  # decoded string content
    prefix: str = ""
    triple: bool = False
    closed: bool = True


# --------------------------------------------------------------------------
# tokenizer


def _continuation_ok(line: str) -> bool:
    s = line.lstrip()
    if not s:
        return False
    if _KEYWORD_START.match(s):
        return False
    if line[0] in " \t":
        return True
    return not _STATEMENT_START.match(s)


def _find_quote(s: str, quote: str, start: int = 0, end: int | None = None) -> int:
    i = start
    end = len(s) if end is None else end
    while i < end:
        c = s[i]
        if c == "\\":
            i += 2
            continue
        if c == quote:
            return i
        i += 1
    return -1


class _Scanner:
    def __init__(self, text: str, lines: list[str]):
        self.text = text
        self.lines = lines
        # offsets of line starts
        self.starts = [0]
        for m in re.finditer("\n", text):
            self.starts.append(m.end())
        self.toks: list[Tok] = []

    def pos(self, i: int) -> tuple[int, int]:
        lo, hi = 0, len(self.starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.starts[mid] <= i:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, i - self.starts[lo]

    def _line_end(self, i: int) -> int:
        j = self.text.find("\n", i)
        return len(self.text) if j < 0 else j

    def _string(self, i: int, prefix: str) -> int:
        """Scan a string literal whose opening quote is at i. Returns the next index."""
        text = self.text
        start = i - len(prefix)
        quote = text[i]
        triple = text[i : i + 3] == quote * 3
        raw_prefix = prefix.lower()
        if triple:
            j = text.find(quote * 3, i + 3)
            while j > 0 and text[j - 1] == "\\" and "r" not in raw_prefix:
                j = text.find(quote * 3, j + 1)
            closed = j >= 0
            end = j + 3 if closed else len(text)
            content = text[i + 3 : j] if closed else text[i + 3 :]
            self._emit_string(start, end, prefix, quote * 3, content, True, closed)
            return end

        eol = self._line_end(i)
        q = _find_quote(text, quote, i + 1, eol)
        if q >= 0:
            self._emit_string(start, q + 1, prefix, quote, text[i + 1 : q], False, True)
            return q + 1
        # heuristic rejoin of a hard-wrapped literal
        parts = [text[i + 1 : eol]]
        j = eol + 1
        for _ in range(MAX_STRING_CONTINUATION):
            if j > len(text):
                break
            nxt_end = self._line_end(j)
            nxt = text[j:nxt_end]
            if not _continuation_ok(nxt):
                break
            stripped_at = j + (len(nxt) - len(nxt.lstrip()))
            body = text[stripped_at:nxt_end]
            q = _find_quote(body, quote)
            if q >= 0:
                parts.append(body[:q])
                self._emit_string(start, stripped_at + q + 1, prefix, quote, "".join(parts), False, True)
                return stripped_at + q + 1
            parts.append(body)
            j = nxt_end + 1
        # give up: the literal ends at end of line
        self._emit_string(start, eol, prefix, quote, text[i + 1 : eol], False, False)
        return eol

    def _emit_string(self, start: int, end: int, prefix: str, quote: str, content: str, triple: bool, closed: bool) -> None:
        value = content
        if "f" not in prefix.lower():
            try:
                lit = _literal(f"{prefix}{quote}{content}{quote}")
                value = lit.decode("latin-1") if isinstance(lit, bytes) else str(lit)
            except (SyntaxError, ValueError, MemoryError, RecursionError):
                value = content
        l0, c0 = self.pos(start)
        l1, c1 = self.pos(max(start, end - 1))
        self.toks.append(
            Tok("STRING", self.text[start:end], l0, c0, l1, c1 + 1, value=value, prefix=prefix, triple=triple, closed=closed)
        )

    def run(self) -> list[Tok]:
        text = self.text
        n = len(text)
        i = 0
        depth = 0
        while i < n:
            c = text[i]
            if c == "\n":
                line, col = self.pos(i)
                if depth > 0:
                    nxt = text[i + 1 : self._line_end(i + 1)]
                    if _RECOVERY_START.match(nxt) and not nxt[:1].isspace():
                        depth = 0
                if depth == 0:
                    self.toks.append(Tok("NEWLINE", "\n", line, col, line, col + 1))
                i += 1
                continue
            if c in " \t\r\f":
                i += 1
                continue
            if c == "#":
                i = self._line_end(i)
                continue
            if c == "\\" and i + 1 < n and text[i + 1] == "\n":
                i += 2
                continue
            if c in "\"'":
                i = self._string(i, "")
                continue
            if c.isalpha() or c == "_" or ord(c) > 127:
                j = i + 1
                while j < n and (_NAME_CHARS.match(text[j]) or ord(text[j]) > 127):
                    j += 1
                word = text[i:j]
                if j < n and text[j] in "\"'" and _STRING_PREFIX.match(word):
                    i = self._string(j, word)
                    continue
                l0, c0 = self.pos(i)
                self.toks.append(Tok("NAME", word, l0, c0, l0, c0 + len(word)))
                i = j
                continue
            if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
                m = re.compile(r"0[xXoObB][0-9a-fA-F_]+|[0-9_]*\.?[0-9_]+(?:[eE][+-]?[0-9]+)?[jJ]?").match(text, i)
                j = m.end() if m and m.end() > i else i + 1
                l0, c0 = self.pos(i)
                self.toks.append(Tok("NUMBER", text[i:j], l0, c0, l0, c0 + (j - i)))
                i = j
                continue
            op = c
            for cand in _OPERATORS:
                if text.startswith(cand, i):
                    op = cand
                    break
            if op in "([{":
                depth += 1
            elif op in ")]}":
                depth = max(0, depth - 1)
            l0, c0 = self.pos(i)
            if op == ";" and depth == 0:
                self.toks.append(Tok("NEWLINE", ";", l0, c0, l0, c0 + 1))
            else:
                self.toks.append(Tok("OP", op, l0, c0, l0, c0 + len(op)))
            i += len(op)
        if self.toks and self.toks[-1].kind != "NEWLINE":
            last = self.toks[-1]
            self.toks.append(Tok("NEWLINE", "", last.end_line, last.end_col, last.end_line, last.end_col))
        return self.toks


def tokenize_tolerant(text: str) -> list[Tok]:
    return _Scanner(text, text.splitlines()).run()


# --------------------------------------------------------------------------
# statement reconstruction


_OPEN = {"(": ")", "[": "]", "{": "}"}


def _match(toks: list[Tok], i: int, hi: int) -> int:
    """Index of the bracket closing toks[i], or hi when unclosed."""
    depth = 0
    for j in range(i, hi):
        t = toks[j]
        if t.kind != "OP":
            continue
        if t.text in _OPEN:
            depth += 1
        elif t.text in (")", "]", "}"):
            depth -= 1
            if depth == 0:
                return j
    return hi


def _split_top(toks: list[Tok], lo: int, hi: int, sep: str = ",") -> list[tuple[int, int]]:
    out = []
    depth = 0
    start = lo
    for j in range(lo, hi):
        t = toks[j]
        if t.kind == "OP":
            if t.text in _OPEN:
                depth += 1
            elif t.text in (")", "]", "}"):
                depth -= 1
            elif t.text == sep and depth == 0:
                out.append((start, j))
                start = j + 1
    if start < hi:
        out.append((start, hi))
    return out


@dataclass
class _Block:
    indent: int
    kind: str  # class, def, if, try, except, with, other
    line: int
    name: Optional[str] = None
    hook: bool = False
    enclosing: Enclosing = Enclosing.MODULE
    guard: Optional[tuple[int, str]] = None
    event: Optional[dict[str, Any]] = None  # mutable builder for events whose span depends on the body
    body: list[str] = field(default_factory=list)
    last_line: int = 0


_QUOTED = re.compile(r"'[^']*'|\"[^\"]*\"")


def _placeholders(value: str, fragments: list[str], names: list[str]) -> None:
    """Split an f-string body into literal text and the names its placeholders read.

    Quoted literals inside a placeholder count as fragments, not names.
    """
    fragments.extend(p for p in re.split(r"\{[^{}]*\}", value) if p)
    for m in re.finditer(r"\{([^{}]*)\}", value):
        expr = m.group(1)
        fragments.extend(q[1:-1] for q in _QUOTED.findall(expr) if len(q) > 2)
        names.extend(re.findall(r"[A-Za-z_][\w.]*", _QUOTED.sub(" ", expr)))


class _Builder:
    def __init__(self, text: str, lines: list[str]):
        self.text = text
        self.lines = lines
        self.encoded = lines
        self.toks = tokenize_tolerant(text)
        self.events: list[dict[str, Any]] = []
        self.aliases: dict[str, str] = {}
        self.identifiers: dict[str, list[int]] = defaultdict(list)
        self._eid = 0
        self.stack: list[_Block] = []
        self._last_popped: dict[int, _Block] = {}

    def eid(self) -> int:
        self._eid += 1
        return self._eid

    # -- source text ---------------------------------------------------------

    def src(self, toks: list[Tok], lo: int, hi: int) -> str:
        if lo >= hi:
            return ""
        a, b = toks[lo], toks[hi - 1]
        if a.line == b.end_line:
            return self.lines[a.line - 1][a.col : b.end_col] if a.line <= len(self.lines) else ""
        parts = [self.lines[a.line - 1][a.col :]]
        for ln in range(a.line + 1, b.end_line):
            parts.append(self.lines[ln - 1])
        if b.end_line <= len(self.lines):
            parts.append(self.lines[b.end_line - 1][: b.end_col])
        return "\n".join(parts)

    # -- context -------------------------------------------------------------

    def context(self, parent: Optional[int], role: str) -> dict[str, Any]:
        enclosing = Enclosing.MODULE
        function = None
        class_name = None
        guards = []
        for blk in self.stack:
            if blk.kind == "class":
                enclosing, class_name = Enclosing.CLASS, blk.name
            elif blk.kind == "def":
                enclosing, function = blk.enclosing, blk.name
                guards = []
            elif blk.guard is not None:
                guards.append(blk.guard)
        return {
            "enclosing": enclosing,
            "function": function,
            "class_name": class_name,
            "guards": tuple(guards),
            "parent": parent,
            "role": role if parent is not None else "",
        }

    def _new_def_enclosing(self, name: str) -> Enclosing:
        for blk in reversed(self.stack):
            if blk.kind == "def":
                return Enclosing.HOOK_RUN if blk.enclosing is Enclosing.HOOK_RUN else Enclosing.FUNCTION
            if blk.kind == "class":
                return Enclosing.HOOK_RUN if (blk.hook and name == "run") else Enclosing.FUNCTION
        return Enclosing.FUNCTION

    # -- expressions ---------------------------------------------------------

    def scan(self, toks: list[Tok], lo: int, hi: int, parent: Optional[int], role: str, in_test: bool = False) -> list[int]:
        """Emit Call/StringLiteral events found in toks[lo:hi]; return call eids."""
        created: list[int] = []
        i = lo
        while i < hi:
            t = toks[i]
            if t.kind == "STRING":
                j = i
                while j < hi and toks[j].kind == "STRING":
                    j += 1
                self._string_event(toks, i, j, parent, role)
                created.extend(self._fstring_calls(toks[i:j], parent, role))
                i = j
                continue
            if t.kind == "NAME" and not keyword.iskeyword(t.text):
                j = i + 1
                while j + 1 < hi and toks[j].text == "." and toks[j + 1].kind == "NAME":
                    j += 2
                chain = "".join(x.text for x in toks[i:j])
                for x in toks[i:j:2]:
                    self.identifiers[x.text].append(x.line)
                if j < hi and toks[j].text == "(":
                    end, eid = self._call(toks, i, j, chain, hi, parent, role, in_test)
                    created.append(eid)
                    i = end
                    continue
                i = j
                continue
            if t.kind == "NAME" and t.text == "lambda":
                i += 1
                continue
            i += 1
        return created

    def _call(self, toks, i, lparen, chain, hi, parent, role, in_test) -> tuple[int, int]:
        # collect the postfix chain:  chain(args)(.name(args))*
        segments = [(chain, i, lparen, _match(toks, lparen, hi))]
        k = segments[-1][3] + 1
        callee = chain
        while k + 2 < hi + 1 and k < hi and toks[k].text == "." and k + 1 < hi and toks[k + 1].kind == "NAME":
            m = k + 2
            names = [toks[k + 1].text]
            while m + 1 < hi and toks[m].text == "." and toks[m + 1].kind == "NAME":
                names.append(toks[m + 1].text)
                m += 2
            if m < hi and toks[m].text == "(":
                callee = f"{callee}()." + ".".join(names)
                segments.append((callee, i, m, _match(toks, m, hi)))
                k = segments[-1][3] + 1
            else:
                break
        # outermost call first so it receives the smaller id
        eids = [self.eid() for _ in segments]
        eids.reverse()
        for idx, (path, start, lp, rp) in enumerate(segments):
            my_eid = eids[idx]
            if idx + 1 < len(segments):
                my_parent, my_role = eids[idx + 1], "receiver"
            else:
                my_parent, my_role = parent, role
            # the receiver of a chained call is the previous segment's call
            args: list[ArgValue] = []
            kwargs: dict[str, ArgValue] = {}
            if idx == 0:
                pass
            for a, b in _split_top(toks, lp + 1, rp):
                if a >= b:
                    continue
                if b - a >= 2 and toks[a].kind == "NAME" and toks[a + 1].text == "=":
                    name = toks[a].text
                    sub = self.scan(toks, a + 2, b, my_eid, f"kwarg:{name}", in_test)
                    kwargs[name] = self.arg(toks, a + 2, b, sub)
                elif toks[a].text == "**":
                    sub = self.scan(toks, a + 1, b, my_eid, "kwarg:**", in_test)
                    kwargs["**"] = self.arg(toks, a + 1, b, sub)
                else:
                    a2 = a + 1 if toks[a].text == "*" else a
                    sub = self.scan(toks, a2, b, my_eid, "arg", in_test)
                    args.append(self.arg(toks, a2, b, sub))
            end_tok = toks[rp] if rp < hi else toks[hi - 1]
            flags = set()
            if in_test:
                flags.add("in_test")
            if rp >= hi:
                flags.add("unclosed")
            self.events.append(
                {
                    "kind": EventKind.CALL,
                    "line_start": toks[start].line,
                    "line_end": end_tok.end_line,
                    "callee_path": path,
                    "args": tuple(args),
                    "kwargs": kwargs,
                    "text_excerpt": self.src(toks, start, min(rp + 1, hi))[:EXCERPT_LIMIT],
                    "eid": my_eid,
                    "flags": frozenset(flags),
                    **self.context(my_parent, my_role),
                }
            )
        return min(segments[-1][3] + 1, hi), eids[0]

    def _fstring_calls(self, strs: list[Tok], parent, role) -> list[int]:
        out = []
        for t in strs:
            if "f" not in t.prefix.lower():
                continue
            for m in re.finditer(r"\{([^{}]*)\}", t.value or ""):
                for cm in re.finditer(r"([A-Za-z_][\w.]*)\s*\(", _QUOTED.sub("''", m.group(1))):
                    eid = self.eid()
                    out.append(eid)
                    self.events.append(
                        {
                            "kind": EventKind.CALL,
                            "line_start": t.line,
                            "line_end": t.end_line,
                            "callee_path": cm.group(1),
                            "args": (),
                            "kwargs": {},
                            "text_excerpt": cm.group(0)[:EXCERPT_LIMIT],
                            "eid": eid,
                            "flags": frozenset(),
                            **self.context(parent, role),
                        }
                    )
        return out

    def _string_event(self, toks, i, j, parent, role) -> None:
        val = self.arg(toks, i, j, [])
        flags = set()
        if any(t.triple for t in toks[i:j]):
            flags.add("triple")
        if any("f" in t.prefix.lower() for t in toks[i:j]):
            flags.add("fstring")
        if not all(t.closed for t in toks[i:j]):
            flags.add("unclosed")
        self.events.append(
            {
                "kind": EventKind.STRING,
                "line_start": toks[i].line,
                "line_end": toks[j - 1].end_line,
                "value": val,
                "text_excerpt": self.src(toks, i, j)[:EXCERPT_LIMIT],
                "eid": self.eid(),
                "flags": frozenset(flags),
                **self.context(parent, role),
            }
        )

    def arg(self, toks: list[Tok], lo: int, hi: int, calls: list[int]) -> ArgValue:
        text = self.src(toks, lo, hi)[:EXCERPT_LIMIT]
        if lo >= hi:
            return ArgValue(ArgKind.COMPUTED, None, text)
        seg = toks[lo:hi]
        if all(t.kind == "STRING" for t in seg):
            if any("f" in t.prefix.lower() for t in seg):
                frags = []
                names = []
                for t in seg:
                    v = t.value or ""
                    if "f" in t.prefix.lower():
                        _placeholders(v, frags, names)
                    else:
                        frags.append(v)
                return ArgValue(
                    ArgKind.COMPUTED, None, text, fragments=tuple(frags), names=tuple(dict.fromkeys(names)),
                    calls=tuple(calls), ops=frozenset({"fstring"}),
                )
            kind = ArgKind.BYTES if all("b" in t.prefix.lower() for t in seg) else ArgKind.STR
            return ArgValue(kind, "".join(t.value or "" for t in seg), text)
        if len(seg) == 1 and seg[0].kind == "NUMBER":
            try:
                return ArgValue(ArgKind.NUM, _literal(seg[0].text), text)
            except (SyntaxError, ValueError, MemoryError, RecursionError):
                return ArgValue(ArgKind.NUM, seg[0].text, text)
        if len(seg) == 1 and seg[0].text in ("True", "False", "None"):
            return ArgValue(ArgKind.CONST, {"True": True, "False": False, "None": None}[seg[0].text], text)
        if seg[0].text in ("[", "(", "{") and _match(toks, lo, hi) == hi - 1:
            inner = _split_top(toks, lo + 1, hi - 1)
            is_dict = seg[0].text == "{" and any(
                any(toks[k].text == ":" for k in range(a, b)) for a, b in inner
            )
            if seg[0].text != "(" or len(inner) != 1 or any(toks[k].text == "," for k in range(lo + 1, hi - 1)):
                if is_dict:
                    keys, vals = [], []
                    for a, b in inner:
                        parts = _split_top(toks, a, b, ":")
                        if len(parts) >= 2:
                            keys.append(self.arg(toks, parts[0][0], parts[0][1], self._calls_in(toks, parts[0][0], parts[0][1], calls)))
                            vals.append(self.arg(toks, parts[1][0], b, self._calls_in(toks, parts[1][0], b, calls)))
                    return ArgValue(ArgKind.DICT, None, text, keys=tuple(keys), items=tuple(vals))
                items = tuple(self.arg(toks, a, b, self._calls_in(toks, a, b, calls)) for a, b in inner if a < b)
                return ArgValue(ArgKind.LIST, None, text, items=items)
        fragments: list[str] = []
        names: list[str] = []
        ops: set[str] = set()
        k = lo
        while k < hi:
            t = toks[k]
            if t.kind == "STRING":
                if "f" in t.prefix.lower():
                    ops.add("fstring")
                    _placeholders(t.value or "", fragments, names)
                else:
                    fragments.append(t.value or "")
            elif t.kind == "NAME" and not keyword.iskeyword(t.text):
                j = k + 1
                while j + 1 < hi and toks[j].text == "." and toks[j + 1].kind == "NAME":
                    j += 2
                chain = "".join(x.text for x in toks[k:j])
                names.append(chain)
                last = chain.rsplit(".", 1)[-1]
                if last in ("format", "join", "replace") and "." in chain:
                    ops.add(last)
                k = j
                continue
            elif t.kind == "OP" and t.text in ("+", "%", "^", "&", "|", "<<", ">>", "-", "*"):
                ops.add(t.text)
            elif t.kind == "OP" and t.text == "[" and k > lo and toks[k - 1].kind in ("NAME", "STRING") :
                ops.add("subscript")
            elif t.kind == "OP" and t.text == "." and k + 1 < hi and toks[k + 1].kind == "NAME":
                # method on a call result or literal: .decode, .read, ...
                j = k + 1
                chain = "".join(x.text for x in toks[k:j + 1])
                names.append("?" + chain)
                if toks[j].text in ("format", "join", "replace"):
                    ops.add(toks[j].text)
                k = j + 1
                continue
            k += 1
        return ArgValue(
            ArgKind.COMPUTED,
            None,
            text,
            fragments=tuple(fragments),
            names=tuple(n for n in dict.fromkeys(names) if not n.startswith("?")),
            calls=tuple(sorted(calls)),
            ops=frozenset(ops),
        )

    def _calls_in(self, toks, lo, hi, calls: list[int]) -> list[int]:
        if not calls:
            return []
        lines = {toks[k].line for k in range(lo, hi)}
        keep = []
        for ev in self.events:
            if ev["eid"] in calls and ev["kind"] is EventKind.CALL and ev["line_start"] in lines:
                keep.append(ev["eid"])
        return keep

    # -- statements ------------------------------------------------------------

    def logical_lines(self) -> list[list[Tok]]:
        out, cur = [], []
        for t in self.toks:
            if t.kind == "NEWLINE":
                if cur:
                    out.append(cur)
                cur = []
            else:
                cur.append(t)
        if cur:
            out.append(cur)
        return out

    def _indent_of(self, t: Tok) -> int:
        line = self.lines[t.line - 1] if t.line <= len(self.lines) else ""
        # a statement after ';' shares the indentation of its line
        return len(line) - len(line.lstrip(" \t"))

    def _pop_to(self, indent: int) -> None:
        while self.stack and self.stack[-1].indent >= indent:
            blk = self.stack.pop()
            self._close(blk)
            self._last_popped[blk.indent] = blk

    def _close(self, blk: _Block) -> None:
        if blk.event is not None:
            ev = blk.event
            end = max(blk.last_line, ev["line_start"])
            if ev["kind"] is EventKind.CLASSDEF:
                ev["line_end"] = end
                ev["region"] = (ev["line_start"], end)
            elif ev["kind"] is EventKind.TRY_HANDLER and "suppress" not in ev["flags"]:
                ev["line_end"] = end
                body_ok = all(b in ("pass", "...", "continue") for b in blk.body)
                if body_ok:
                    ev["flags"] = ev["flags"] | {"pass_only"}
            elif ev["kind"] is EventKind.TRY_HANDLER:
                ev["region"] = (ev["line_start"] + 1, max(end, ev["line_start"] + 1))
        if self.stack:
            self.stack[-1].last_line = max(self.stack[-1].last_line, blk.last_line)

    def _note_line(self, line: int, stmt_text: str) -> None:
        for blk in self.stack:
            blk.last_line = max(blk.last_line, line)
        if self.stack:
            self.stack[-1].body.append(stmt_text)

    def build(self) -> None:
        top_level: list[tuple[int, int, str]] = []
        for toks in self.logical_lines():
            indent = self._indent_of(toks[0])
            self._pop_to(indent)
            last_line = toks[-1].end_line
            if not self.stack and indent == 0:
                top_level.append((toks[0].line, last_line, toks[0].text))
            self._note_line(last_line, toks[0].text if len(toks) == 1 else " ".join(t.text for t in toks[:2]))
            self.statement(toks, indent)
        self._pop_to(-1)
        # top-level statements extend over their indented bodies
        for idx, (l0, l1, head) in enumerate(top_level):
            nxt = top_level[idx + 1][0] - 1 if idx + 1 < len(top_level) else len(self.lines)
            end = l1
            for ln in range(l1 + 1, nxt + 1):
                if ln <= len(self.lines) and self.lines[ln - 1].strip() and self.lines[ln - 1][:1].isspace():
                    end = ln
            self.events.append(
                {
                    "kind": EventKind.TOP_LEVEL,
                    "line_start": l0,
                    "line_end": max(end, l0),
                    "text_excerpt": self.lines[l0 - 1].strip()[:EXCERPT_LIMIT] if l0 <= len(self.lines) else "",
                    "eid": self.eid(),
                    "name": head,
                    "enclosing": Enclosing.MODULE,
                }
            )

    def _colon(self, toks: list[Tok]) -> int:
        depth = 0
        for k, t in enumerate(toks):
            if t.kind != "OP":
                continue
            if t.text in _OPEN:
                depth += 1
            elif t.text in (")", "]", "}"):
                depth -= 1
            elif t.text == ":" and depth == 0:
                return k
        return -1

    def _inline_body(self, toks: list[Tok], colon: int, indent: int) -> None:
        if 0 <= colon < len(toks) - 1:
            body = toks[colon + 1 :]
            self.stack[-1].body.append(body[0].text)
            self.stack[-1].last_line = max(self.stack[-1].last_line, body[-1].end_line)
            self.statement(body, indent + 1)

    def statement(self, toks: list[Tok], indent: int) -> None:
        head = toks[0].text
        line = toks[0].line
        if head == "async" and len(toks) > 1:
            toks = toks[1:]
            head = toks[0].text
        colon = self._colon(toks)

        if head == "class" and len(toks) > 1:
            name = toks[1].text
            bases: list[str] = []
            if len(toks) > 2 and toks[2].text == "(":
                rp = _match(toks, 2, len(toks))
                for a, b in _split_top(toks, 3, rp):
                    bases.append("".join(t.text for t in toks[a:b]))
            hook = any(b.split(".")[-1] in HOOK_BASES for b in bases)
            ev = {
                "kind": EventKind.CLASSDEF,
                "line_start": line,
                "line_end": line,
                "name": name,
                "targets": tuple(bases),
                "text_excerpt": self.src(toks, 0, len(toks))[:EXCERPT_LIMIT],
                "eid": self.eid(),
                "flags": frozenset({"hook"}) if hook else frozenset(),
                **self.context(None, ""),
            }
            self.events.append(ev)
            self.identifiers[name].append(line)
            self.stack.append(_Block(indent, "class", line, name=name, hook=hook, event=ev, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head == "def" and len(toks) > 1:
            name = toks[1].text
            self.identifiers[name].append(line)
            enc = self._new_def_enclosing(name)
            self.stack.append(_Block(indent, "def", line, name=name, enclosing=enc, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head in ("if", "elif", "while") and colon > 0:
            self.scan(toks, 1, colon, None, "", in_test=True)
            cond = self.src(toks, 1, colon)
            guard = (line, cond) if head != "while" else None
            self.stack.append(_Block(indent, "if", line, guard=guard, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head == "else" and colon >= 0:
            prev = self._last_popped.get(indent)
            guard = (prev.guard[0], f"not ({prev.guard[1]})") if prev and prev.guard else None
            self.stack.append(_Block(indent, "if", line, guard=guard, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head in ("try", "finally") and colon >= 0:
            self.stack.append(_Block(indent, head, line, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head == "except":
            prev = self._last_popped.get(indent)
            region_start = prev.line + 1 if prev and prev.kind in ("try", "except") else line
            if prev and prev.kind == "except" and prev.event is not None:
                region = prev.event.get("region") or (region_start, max(region_start, line - 1))
            else:
                region = (region_start, max(region_start, line - 1))
            type_toks = toks[1:colon] if colon > 0 else toks[1:]
            type_text = self.src(toks, 1, colon) if colon > 1 else None
            broad = not type_toks or any(t.text in ("Exception", "BaseException") for t in type_toks)
            ev = {
                "kind": EventKind.TRY_HANDLER,
                "line_start": line,
                "line_end": line,
                "name": type_text,
                "text_excerpt": self.src(toks, 0, len(toks))[:EXCERPT_LIMIT],
                "eid": self.eid(),
                "region": region,
                "flags": frozenset({"broad"}) if broad else frozenset(),
                **self.context(None, ""),
            }
            self.events.append(ev)
            self.stack.append(_Block(indent, "except", line, event=ev, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head == "with" and colon > 0:
            for a, b in _split_top(toks, 1, colon):
                as_idx = next((k for k in range(a, b) if toks[k].text == "as"), None)
                expr_hi = as_idx if as_idx is not None else b
                if toks[a].kind == "NAME" and toks[a].text.split(".")[-1] == "suppress" or (
                    a + 2 < expr_hi and toks[a + 2].text == "suppress"
                ):
                    broad = any(t.text in ("Exception", "BaseException") for t in toks[a:expr_hi])
                    ev = {
                        "kind": EventKind.TRY_HANDLER,
                        "line_start": line,
                        "line_end": line,
                        "name": "suppress",
                        "text_excerpt": self.src(toks, a, expr_hi)[:EXCERPT_LIMIT],
                        "eid": self.eid(),
                        "region": (line + 1, line + 1),
                        "flags": frozenset({"suppress", "pass_only"} | ({"broad"} if broad else set())),
                        **self.context(None, ""),
                    }
                    self.events.append(ev)
                    self.stack.append(_Block(indent, "with", line, event=ev, last_line=line))
                    self.scan(toks, a, expr_hi, None, "")
                    self._inline_body(toks, colon, indent)
                    return
                if as_idx is not None and as_idx + 1 < b:
                    self._assignment(toks, [(as_idx + 1, b)], a, as_idx, line, {"with"})
                else:
                    self.scan(toks, a, expr_hi, None, "")
            self.stack.append(_Block(indent, "with", line, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head == "for" and colon > 0:
            in_idx = next((k for k in range(1, colon) if toks[k].text == "in"), None)
            if in_idx is not None:
                self._assignment(toks, [(1, in_idx)], in_idx + 1, colon, line, {"for"})
            self.stack.append(_Block(indent, "other", line, last_line=line))
            self._inline_body(toks, colon, indent)
            return

        if head == "import":
            for a, b in _split_top(toks, 1, len(toks)):
                names = [t.text for t in toks[a:b]]
                if "as" in names:
                    k = names.index("as")
                    module = "".join(names[:k])
                    bound = names[k + 1] if k + 1 < len(names) else module
                    self.aliases[bound] = module
                else:
                    module = "".join(names)
                    bound = module.split(".")[0]
                    self.aliases[bound] = bound
                self._import_event(toks, line, module, bound)
            return

        if head == "from" and len(toks) > 2:
            imp = next((k for k, t in enumerate(toks) if t.text == "import"), None)
            if imp is not None:
                module = "".join(t.text for t in toks[1:imp])
                lo = imp + 1
                hi = len(toks)
                if lo < hi and toks[lo].text == "(":
                    hi = _match(toks, lo, hi)
                    lo += 1
                for a, b in _split_top(toks, lo, hi):
                    names = [t.text for t in toks[a:b]]
                    if not names:
                        continue
                    bound = names[2] if len(names) > 2 and names[1] == "as" else names[0]
                    self.aliases[bound] = f"{module}.{names[0]}"
                    self._import_event(toks, line, f"{module}.{names[0]}", bound)
            return

        if head in ("return", "raise", "del", "assert", "yield", "await", "print", "global", "nonlocal"):
            start = 1 if head not in ("print", "await") else 0
            self.scan(toks, start, len(toks), None, "")
            return

        if head in ("pass", "break", "continue"):
            return

        # assignment?
        depth = 0
        eq_positions = []
        for k, t in enumerate(toks):
            if t.kind != "OP":
                continue
            if t.text in _OPEN:
                depth += 1
            elif t.text in (")", "]", "}"):
                depth -= 1
            elif depth == 0 and t.text in ("=", "+=", "-=", "|=", "^=", ":="):
                eq_positions.append(k)
        if eq_positions:
            targets = []
            prev = 0
            for k in eq_positions:
                targets.extend(_split_top(toks, prev, k))
                prev = k + 1
            last = eq_positions[-1]
            flags = {"aug"} if toks[last].text not in ("=",) else set()
            self._assignment(toks, targets, last + 1, len(toks), line, flags)
            return

        self.scan(toks, 0, len(toks), None, "")

    def _assignment(self, toks, targets, lo, hi, line, flags) -> None:
        targets = [(a, b) for a, b in targets if a < b]
        if not targets and lo >= hi:
            return
        eid = self.eid()
        names = []
        for a, b in targets:
            if a >= b:
                continue
            text = self.src(toks, a, b).strip()
            if toks[a].kind == "NAME":
                self.identifiers[toks[a].text].append(toks[a].line)
            if b - a > 1 and all(t.kind == "NAME" or t.text == "." for t in toks[a:b]):
                names.append("".join(t.text for t in toks[a:b]))
            else:
                names.append(text)
            # subscripts and attribute targets may contain calls
            if any(t.text == "(" for t in toks[a:b]):
                self.scan(toks, a, b, None, "")
        if lo > 0 and toks[lo - 1].text == "in":
            # for-loop: split comma-joined target names
            names = [n.strip() for raw in names for n in raw.split(",") if n.strip()]
        sub = self.scan(toks, lo, hi, None, "")
        value = self.arg(toks, lo, hi, sub)
        first = toks[targets[0][0]] if targets else toks[lo]
        self.events.append(
            {
                "kind": EventKind.ASSIGNMENT,
                "line_start": min(first.line, line),
                "line_end": max(toks[hi - 1].end_line, first.end_line),
                "targets": tuple(names),
                "value": value,
                "text_excerpt": self.src(toks, targets[0][0] if targets else lo, hi)[:EXCERPT_LIMIT],
                "eid": eid,
                "flags": frozenset(flags),
                **self.context(None, ""),
            }
        )

    def _import_event(self, toks, line, module, bound) -> None:
        self.events.append(
            {
                "kind": EventKind.IMPORT,
                "line_start": line,
                "line_end": toks[-1].end_line,
                "name": module,
                "targets": (bound,),
                "text_excerpt": self.src(toks, 0, len(toks))[:EXCERPT_LIMIT],
                "eid": self.eid(),
                **self.context(None, ""),
            }
        )


def _freeze(ev: dict[str, Any], n_lines: int) -> SyntaxEvent:
    ev = dict(ev)
    l0 = min(max(1, ev.pop("line_start")), max(n_lines, 1))
    l1 = min(max(l0, ev.pop("line_end")), max(n_lines, 1))
    return SyntaxEvent(line_start=l0, line_end=l1, **ev)


def lexical_events(text: str, lines: list[str]):
    """Events, import aliases and identifier lines recovered from tokens."""
    b = _Builder(text, lines)
    try:
        b.build()
    except RecursionError:
        pass
    events = [_freeze(ev, len(lines)) for ev in b.events]
    return events, b.aliases, b.identifiers
