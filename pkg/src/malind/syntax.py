"""Source text to a normalized stream of syntax events.

``parse_source`` tries a full ``ast`` parse first. Malicious files are often
broken on purpose (or mangled in transit), so on a syntax error it retries on
a dedented copy and finally falls back to the tolerant token scanner in
:mod:`malind.lexical`. The fallback never raises; it sets
``parse_degraded`` instead.
"""

from __future__ import annotations

import ast
import base64
import binascii
import math
import posixpath
import re
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Optional

EXCERPT_LIMIT = 200

# sensitive callee names the lexical fallback always recovers
SENSITIVE_NAMES = frozenset(
    {
        "exec", "eval", "compile", "system", "popen", "Popen", "call", "check_call",
        "check_output", "run", "connect", "get", "post", "put", "urlopen", "Request",
        "b64decode", "decode", "decrypt", "write", "open", "remove", "rename", "spawn",
        "dup2", "listdir", "walk", "getlogin", "gethostname", "setup", "__import__",
    }
)

SETUP_ENTRY_POINTS = frozenset({"setup", "setuptools.setup", "distutils.core.setup"})

HOOK_BASES = frozenset(
    {
        "install", "develop", "build", "build_py", "build_ext", "sdist", "egg_info",
        "bdist_wheel", "bdist_egg", "easy_install", "install_lib", "install_scripts",
        "bdist", "test", "Command",
    }
)


class EventKind(str, Enum):
    IMPORT = "Import"
    CALL = "Call"
    STRING = "StringLiteral"
    CLASSDEF = "ClassDef"
    TRY_HANDLER = "TryHandler"
    TOP_LEVEL = "TopLevelStmt"
    ASSIGNMENT = "Assignment"


class Enclosing(str, Enum):
    MODULE = "ModuleTop"
    FUNCTION = "FunctionBody"
    CLASS = "ClassBody"
    HOOK_RUN = "HookRunMethod"


class ArgKind(str, Enum):
    STR = "str"
    BYTES = "bytes"
    NUM = "num"
    CONST = "const"  # True / False / None
    LIST = "list"  # list, tuple or set display
    DICT = "dict"
    COMPUTED = "computed"


@dataclass(frozen=True)
class ArgValue:
    """An argument or right-hand side, literal where the source makes it so.

    Computed values are never evaluated. ``fragments`` holds the string
    constants that appear inside the expression, ``names`` the dotted names it
    reads and ``calls`` the event ids of calls nested in it.
    """

    kind: ArgKind
    value: Any = None
    text: str = ""
    fragments: tuple[str, ...] = ()
    names: tuple[str, ...] = ()
    calls: tuple[int, ...] = ()
    items: tuple["ArgValue", ...] = ()
    keys: tuple["ArgValue", ...] = ()
    ops: frozenset[str] = frozenset()

    @property
    def computed(self) -> bool:
        return self.kind is ArgKind.COMPUTED

    @property
    def is_text(self) -> bool:
        return self.kind in (ArgKind.STR, ArgKind.BYTES)

    def strings(self) -> list[str]:
        """Every literal string reachable inside this value."""
        out: list[str] = []
        if self.is_text:
            out.append(self.value)
        out.extend(self.fragments)
        for sub in self.keys + self.items:
            out.extend(sub.strings())
        return out

    def all_names(self) -> list[str]:
        out = list(self.names)
        for sub in self.keys + self.items:
            out.extend(sub.all_names())
        return out

    def all_calls(self) -> list[int]:
        out = list(self.calls)
        for sub in self.keys + self.items:
            out.extend(sub.all_calls())
        return out

    @property
    def excerpt(self) -> str:
        if self.is_text:
            return excerpt_literal(self.value)
        return self.text


@dataclass(frozen=True)
class SyntaxEvent:
    kind: EventKind
    line_start: int
    line_end: int
    enclosing: Enclosing = Enclosing.MODULE
    callee_path: Optional[str] = None
    args: tuple[ArgValue, ...] = ()
    kwargs: Mapping[str, ArgValue] = field(default_factory=dict)
    text_excerpt: str = ""
    eid: int = 0
    parent: Optional[int] = None  # innermost enclosing call
    role: str = ""  # "arg", "kwarg:<name>", "receiver", "" (not inside a call)
    name: Optional[str] = None
    targets: tuple[str, ...] = ()
    value: Optional[ArgValue] = None
    guards: tuple[tuple[int, str], ...] = ()
    function: Optional[str] = None
    class_name: Optional[str] = None
    region: Optional[tuple[int, int]] = None
    flags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SetupManifest:
    present: bool = False
    name: Optional[str] = None
    author: Optional[str] = None
    author_email: Optional[str] = None
    description: Optional[str] = None
    dependencies: tuple[str, ...] = ()
    cmdclass_hooks: tuple[tuple[str, str], ...] = ()
    line_start: int = 0
    line_end: int = 0
    # field name -> source excerpt of the keyword argument
    excerpts: Mapping[str, str] = field(default_factory=dict)
    computed_fields: tuple[str, ...] = ()


@dataclass(frozen=True)
class ParseOutcome:
    events: tuple[SyntaxEvent, ...]
    manifest: Optional[SetupManifest]
    parse_degraded: bool
    lines: tuple[str, ...] = ()
    aliases: Mapping[str, str] = field(default_factory=dict)
    identifiers: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    rel_path: str = ""

    @property
    def line_count(self) -> int:
        return len(self.lines)

    def calls(self) -> list[SyntaxEvent]:
        return [e for e in self.events if e.kind is EventKind.CALL]

    def by_kind(self, kind: EventKind) -> list[SyntaxEvent]:
        return [e for e in self.events if e.kind is kind]


# --------------------------------------------------------------------------
# small helpers shared with the lexical fallback


def excerpt_literal(s: str, limit: int = EXCERPT_LIMIT) -> str:
    """Head and tail of a long literal; the total length goes in the middle."""
    if len(s) <= limit:
        return s
    marker = f"...[{len(s)} chars]..."
    keep = (limit - len(marker)) // 2
    return s[:keep] + marker + s[-keep:]


def shannon_entropy(s: str) -> float:
    if not s:
        return 0.0
    counts = Counter(s)
    n = len(s)
    return -sum(c / n * math.log2(c / n) for c in counts.values())


_B64_ALPHABET = re.compile(r"^[A-Za-z0-9+/_-]+={0,2}$")


def looks_base64(s: str, min_len: int = 120) -> bool:
    """True for a long literal that decodes cleanly as base64 to text or a known blob."""
    compact = "".join(s.split())
    if len(compact) < min_len or len(compact) % 4 or not _B64_ALPHABET.match(compact):
        return False
    try:
        raw = base64.b64decode(compact, altchars=b"-_" if ("-" in compact or "_" in compact) else None, validate=True)
    except (binascii.Error, ValueError):
        return False
    if raw[:2] in (b"\x78\x9c", b"\x78\xda", b"\x1f\x8b", b"PK", b"MZ") or raw[:4] == b"\x7fELF":
        return True
    printable = sum(1 for b in raw if 32 <= b < 127 or b in (9, 10, 13))
    return printable >= 0.9 * len(raw)


def split_excerpt(lines: tuple[str, ...] | list[str], start: int, end: int) -> str:
    """Stripped source of lines start..end (1-based, inclusive), capped."""
    chunk = " ".join(line.strip() for line in lines[start - 1 : end] if line.strip())
    return chunk[:EXCERPT_LIMIT]


def normalize_dist_name(spec: str) -> Optional[str]:
    m = re.match(r"\s*([A-Za-z0-9][A-Za-z0-9._-]*)", spec)
    if not m:
        return None
    return re.sub(r"[-_.]+", "-", m.group(1)).lower()


def resolve_callee(path: Optional[str], aliases: Mapping[str, str]) -> str:
    """Rewrite the first component of a dotted callee through import aliases."""
    if not path:
        return ""
    head, _, rest = path.partition(".")
    target = aliases.get(head)
    if target is None:
        return path
    return f"{target}.{rest}" if rest else target


def demangle(name: str) -> str:
    """Undo the ``_ssystem`` / ``_uurlopen`` aliasing idiom seen in droppers."""
    stripped = name.lstrip("_")
    if stripped != name and len(stripped) > 2 and stripped[0] == stripped[1]:
        return stripped[1:]
    return stripped or name


# --------------------------------------------------------------------------
# structural path


class _Lines:
    def __init__(self, lines: list[str], margin: int = 0):
        self.lines = lines
        self.encoded = [line.encode("utf-8") for line in lines]
        self.margin = margin

    def segment(self, node: ast.AST) -> str:
        l0, l1 = node.lineno, getattr(node, "end_lineno", node.lineno) or node.lineno
        c0 = node.col_offset
        c1 = getattr(node, "end_col_offset", None)
        if l0 < 1 or l0 > len(self.encoded):
            return ""
        if l0 == l1:
            raw = self.encoded[l0 - 1][c0 + self.margin : (c1 + self.margin) if c1 is not None else None]
            return raw.decode("utf-8", "replace")
        parts = [self.encoded[l0 - 1][c0 + self.margin :].decode("utf-8", "replace")]
        for ln in range(l0 + 1, min(l1, len(self.encoded))):
            parts.append(self.lines[ln - 1])
        if l1 <= len(self.encoded):
            end = self.encoded[l1 - 1]
            parts.append(end[: (c1 + self.margin) if c1 is not None else None].decode("utf-8", "replace"))
        return "\n".join(parts)

    def excerpt(self, node: ast.AST) -> str:
        return self.segment(node)[:EXCERPT_LIMIT]


def dotted_name(node: ast.AST) -> Optional[str]:
    """``a.b.c`` for Name/Attribute chains, ``f().attr`` through call receivers."""
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        base = dotted_name(node.value)
        return f"{base}.{node.attr}" if base else f"?.{node.attr}"
    if isinstance(node, ast.Call):
        base = dotted_name(node.func)
        return f"{base}()" if base else None
    return None


_BROAD_EXC = {"Exception", "BaseException"}


def _is_broad_handler(node: ast.ExceptHandler) -> bool:
    if node.type is None:
        return True
    types = node.type.elts if isinstance(node.type, ast.Tuple) else [node.type]
    return any((dotted_name(t) or "").split(".")[-1] in _BROAD_EXC for t in types)


def _pass_only(body: list[ast.stmt]) -> bool:
    for stmt in body:
        if isinstance(stmt, (ast.Pass, ast.Continue)):
            continue
        if isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Constant) and stmt.value.value in (Ellipsis, None):
            continue
        return False
    return True


_OPS = {
    ast.Add: "+", ast.Mod: "%", ast.BitXor: "^", ast.BitAnd: "&", ast.BitOr: "|",
    ast.LShift: "<<", ast.RShift: ">>", ast.Sub: "-", ast.Mult: "*",
}


class _Extractor(ast.NodeVisitor):
    def __init__(self, src: _Lines):
        self.src = src
        self.events: list[SyntaxEvent] = []
        self.aliases: dict[str, str] = {}
        self.identifiers: dict[str, list[int]] = defaultdict(list)
        self._next_eid = 0
        self._call_eids: dict[int, int] = {}  # id(ast.Call) -> eid
        # scope stack entries: (enclosing, function, class_name, class_is_hook)
        self._scope: list[tuple[Enclosing, Optional[str], Optional[str], bool]] = [
            (Enclosing.MODULE, None, None, False)
        ]
        self._guards: list[tuple[int, str]] = []
        self._calls: list[int] = []  # eids of calls currently being visited
        self._role = ""
        self._in_test = 0

    # -- bookkeeping -------------------------------------------------------

    def _eid(self) -> int:
        self._next_eid += 1
        return self._next_eid

    def _context(self) -> dict[str, Any]:
        enclosing, function, class_name, _ = self._scope[-1]
        return {
            "enclosing": enclosing,
            "function": function,
            "class_name": class_name,
            "guards": tuple(self._guards),
            "parent": self._calls[-1] if self._calls else None,
            "role": self._role if self._calls else "",
        }

    def _span(self, node: ast.AST) -> tuple[int, int]:
        return node.lineno, getattr(node, "end_lineno", None) or node.lineno

    def _visit_role(self, node: Optional[ast.AST], role: str) -> None:
        if node is None:
            return
        saved = self._role
        self._role = role
        self.visit(node)
        self._role = saved

    # -- argument analysis ---------------------------------------------------

    def arg(self, node: ast.AST) -> ArgValue:
        text = self.src.excerpt(node)
        if isinstance(node, ast.Constant):
            v = node.value
            if isinstance(v, str):
                return ArgValue(ArgKind.STR, v, text)
            if isinstance(v, bytes):
                return ArgValue(ArgKind.BYTES, v.decode("latin-1"), text)
            if isinstance(v, bool) or v is None or v is Ellipsis:
                return ArgValue(ArgKind.CONST, v, text)
            return ArgValue(ArgKind.NUM, v, text)
        if isinstance(node, (ast.List, ast.Tuple, ast.Set)):
            return ArgValue(ArgKind.LIST, None, text, items=tuple(self.arg(e) for e in node.elts))
        if isinstance(node, ast.Dict):
            keys = tuple(self.arg(k) if k is not None else ArgValue(ArgKind.COMPUTED, text="**") for k in node.keys)
            return ArgValue(ArgKind.DICT, None, text, keys=keys, items=tuple(self.arg(v) for v in node.values))
        if isinstance(node, ast.UnaryOp) and isinstance(node.operand, ast.Constant) and isinstance(node.operand.value, (int, float)):
            return ArgValue(ArgKind.NUM, -node.operand.value if isinstance(node.op, ast.USub) else node.operand.value, text)

        fragments: list[str] = []
        names: list[str] = []
        calls: list[int] = []
        ops: set[str] = set()
        for sub in ast.walk(node):
            if isinstance(sub, ast.Constant) and isinstance(sub.value, (str, bytes)):
                fragments.append(sub.value if isinstance(sub.value, str) else sub.value.decode("latin-1"))
            elif isinstance(sub, (ast.Name, ast.Attribute)):
                dn = dotted_name(sub)
                if dn and not dn.startswith("?"):
                    names.append(dn)
            elif isinstance(sub, ast.Call):
                eid = self._call_eids.get(id(sub))
                if eid is not None:
                    calls.append(eid)
                attr = sub.func.attr if isinstance(sub.func, ast.Attribute) else None
                if attr in ("format", "join", "replace"):
                    ops.add(attr)
            elif isinstance(sub, ast.JoinedStr):
                ops.add("fstring")
            elif isinstance(sub, ast.BinOp):
                ops.add(_OPS.get(type(sub.op), "op"))
            elif isinstance(sub, ast.Subscript):
                ops.add("subscript")
        return ArgValue(
            ArgKind.COMPUTED,
            None,
            text,
            fragments=tuple(fragments),
            names=tuple(dict.fromkeys(names)),
            calls=tuple(sorted(set(calls))),
            ops=frozenset(ops),
        )

    # -- visitors ------------------------------------------------------------

    def visit_Module(self, node: ast.Module) -> None:
        for stmt in node.body:
            l0, l1 = self._span(stmt)
            self.events.append(
                SyntaxEvent(
                    EventKind.TOP_LEVEL, l0, l1, eid=self._eid(), text_excerpt=self.src.excerpt(stmt),
                    name=type(stmt).__name__,
                )
            )
            self.visit(stmt)

    def visit_Import(self, node: ast.Import) -> None:
        for alias in node.names:
            bound = alias.asname or alias.name.split(".")[0]
            self.aliases[bound] = alias.name if alias.asname else alias.name.split(".")[0]
            self._import_event(node, alias.name, bound)

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        module = "." * (node.level or 0) + (node.module or "")
        for alias in node.names:
            bound = alias.asname or alias.name
            self.aliases[bound] = f"{module}.{alias.name}" if module else alias.name
            self._import_event(node, f"{module}.{alias.name}", bound)

    def _import_event(self, node: ast.stmt, module: str, bound: str) -> None:
        l0, l1 = self._span(node)
        ctx = self._context()
        self.events.append(
            SyntaxEvent(
                EventKind.IMPORT, l0, l1, eid=self._eid(), name=module, targets=(bound,),
                text_excerpt=self.src.excerpt(node), enclosing=ctx["enclosing"], function=ctx["function"],
                class_name=ctx["class_name"], guards=ctx["guards"],
            )
        )

    def visit_ClassDef(self, node: ast.ClassDef) -> None:
        for deco in node.decorator_list:
            self.visit(deco)
        bases = tuple(dotted_name(b) or self.src.excerpt(b) for b in node.bases)
        for b in node.bases:
            self.visit(b)
        for kw in node.keywords:
            self.visit(kw.value)
        is_hook = any(b.split(".")[-1] in HOOK_BASES for b in bases)
        l0, l1 = self._span(node)
        ctx = self._context()
        self.identifiers[node.name].append(l0)
        self.events.append(
            SyntaxEvent(
                EventKind.CLASSDEF, l0, l1, eid=self._eid(), name=node.name, targets=bases,
                text_excerpt=self.src.lines[l0 - 1].strip()[:EXCERPT_LIMIT] if l0 <= len(self.src.lines) else "",
                enclosing=ctx["enclosing"], function=ctx["function"], class_name=ctx["class_name"],
                guards=ctx["guards"], region=(l0, l1), flags=frozenset({"hook"}) if is_hook else frozenset(),
            )
        )
        self._scope.append((Enclosing.CLASS, None, node.name, is_hook))
        for stmt in node.body:
            self.visit(stmt)
        self._scope.pop()

    def _visit_function(self, node: ast.FunctionDef | ast.AsyncFunctionDef | ast.Lambda) -> None:
        if not isinstance(node, ast.Lambda):
            for deco in node.decorator_list:
                self.visit(deco)
            self.identifiers[node.name].append(node.lineno)
        self.visit(node.args)
        outer, _, class_name, is_hook = self._scope[-1]
        name = getattr(node, "name", "<lambda>")
        if outer is Enclosing.HOOK_RUN or (outer is Enclosing.CLASS and is_hook and name == "run"):
            enclosing = Enclosing.HOOK_RUN
        else:
            enclosing = Enclosing.FUNCTION
        self._scope.append((enclosing, name, class_name, False))
        saved_guards, self._guards = self._guards, []
        body = node.body if isinstance(node.body, list) else [node.body]
        for stmt in body:
            self.visit(stmt)
        self._guards = saved_guards
        self._scope.pop()

    visit_FunctionDef = _visit_function
    visit_AsyncFunctionDef = _visit_function

    def visit_Lambda(self, node: ast.Lambda) -> None:
        self._visit_function(node)

    def visit_arguments(self, node: ast.arguments) -> None:
        for a in node.posonlyargs + node.args + node.kwonlyargs:
            self.identifiers[a.arg].append(a.lineno)
        for d in node.defaults + [d for d in node.kw_defaults if d is not None]:
            self.visit(d)

    def visit_If(self, node: ast.If) -> None:
        self._in_test += 1
        self.visit(node.test)
        self._in_test -= 1
        test_text = self.src.excerpt(node.test)
        self._guards.append((node.lineno, test_text))
        for stmt in node.body:
            self.visit(stmt)
        self._guards.pop()
        if node.orelse:
            self._guards.append((node.lineno, f"not ({test_text})"))
            for stmt in node.orelse:
                self.visit(stmt)
            self._guards.pop()

    def visit_Try(self, node: ast.Try) -> None:
        for stmt in node.body:
            self.visit(stmt)
        region = (node.body[0].lineno, getattr(node.body[-1], "end_lineno", node.body[-1].lineno))
        ctx = self._context()
        for handler in node.handlers:
            l0, l1 = self._span(handler)
            flags = set()
            if _is_broad_handler(handler):
                flags.add("broad")
            if _pass_only(handler.body):
                flags.add("pass_only")
            self.events.append(
                SyntaxEvent(
                    EventKind.TRY_HANDLER, l0, l1, eid=self._eid(),
                    name=self.src.excerpt(handler.type) if handler.type is not None else None,
                    text_excerpt=self.src.excerpt(handler), region=region, flags=frozenset(flags),
                    enclosing=ctx["enclosing"], function=ctx["function"], class_name=ctx["class_name"],
                    guards=ctx["guards"],
                )
            )
            if handler.type is not None:
                self.visit(handler.type)
            for stmt in handler.body:
                self.visit(stmt)
        for stmt in node.orelse + node.finalbody:
            self.visit(stmt)

    visit_TryStar = visit_Try

    def visit_With(self, node: ast.With | ast.AsyncWith) -> None:
        body_span = (node.body[0].lineno, getattr(node.body[-1], "end_lineno", node.body[-1].lineno))
        for item in node.items:
            expr = item.context_expr
            if isinstance(expr, ast.Call) and (dotted_name(expr.func) or "").split(".")[-1] == "suppress":
                ctx = self._context()
                flags = {"suppress", "pass_only"}
                if any((dotted_name(a) or "").split(".")[-1] in _BROAD_EXC for a in expr.args):
                    flags.add("broad")
                self.events.append(
                    SyntaxEvent(
                        EventKind.TRY_HANDLER, node.lineno, node.lineno, eid=self._eid(), name="suppress",
                        text_excerpt=self.src.excerpt(expr), region=body_span, flags=frozenset(flags),
                        enclosing=ctx["enclosing"], function=ctx["function"], class_name=ctx["class_name"],
                        guards=ctx["guards"],
                    )
                )
            if item.optional_vars is not None:
                self._assignment(node, [item.optional_vars], expr, flags={"with"})
            else:
                self.visit(expr)
        for stmt in node.body:
            self.visit(stmt)

    visit_AsyncWith = visit_With

    def _target_names(self, target: ast.AST) -> list[str]:
        if isinstance(target, (ast.Tuple, ast.List)):
            out = []
            for elt in target.elts:
                out.extend(self._target_names(elt))
            return out
        if isinstance(target, ast.Starred):
            return self._target_names(target.value)
        dn = dotted_name(target)
        if dn:
            return [dn]
        return [self.src.segment(target)[:EXCERPT_LIMIT]]

    def _assignment(self, stmt: ast.AST, targets: list[ast.AST], value: Optional[ast.AST], flags: set[str] = frozenset()) -> None:
        eid = self._eid()
        ctx = self._context()
        names: list[str] = []
        for t in targets:
            names.extend(self._target_names(t))
            if not isinstance(t, ast.Name):
                self.visit(t)
            else:
                self.identifiers[t.id].append(t.lineno)
        if value is not None:
            self.visit(value)
        l0, l1 = self._span(stmt)
        self.events.append(
            SyntaxEvent(
                EventKind.ASSIGNMENT, l0, l1, eid=eid, targets=tuple(names),
                value=self.arg(value) if value is not None else None,
                text_excerpt=self.src.excerpt(stmt), enclosing=ctx["enclosing"], function=ctx["function"],
                class_name=ctx["class_name"], guards=ctx["guards"], parent=ctx["parent"], role=ctx["role"],
                flags=frozenset(flags),
            )
        )

    def visit_Assign(self, node: ast.Assign) -> None:
        self._assignment(node, node.targets, node.value)

    def visit_AnnAssign(self, node: ast.AnnAssign) -> None:
        self._assignment(node, [node.target], node.value)

    def visit_AugAssign(self, node: ast.AugAssign) -> None:
        self._assignment(node, [node.target], node.value, flags={"aug"})

    def visit_NamedExpr(self, node: ast.NamedExpr) -> None:
        self._assignment(node, [node.target], node.value, flags={"walrus"})

    def visit_Name(self, node: ast.Name) -> None:
        self.identifiers[node.id].append(node.lineno)

    def visit_Call(self, node: ast.Call) -> None:
        eid = self._eid()
        self._call_eids[id(node)] = eid
        ctx = self._context()
        self._calls.append(eid)
        func = node.func
        if isinstance(func, ast.Attribute):
            self._visit_role(func.value, "receiver")
        else:
            self._visit_role(func, "func")
        for a in node.args:
            self._visit_role(a, "arg")
        for kw in node.keywords:
            self._visit_role(kw.value, f"kwarg:{kw.arg}" if kw.arg else "kwarg:**")
        self._calls.pop()

        kwargs = {}
        for kw in node.keywords:
            kwargs[kw.arg or "**"] = self.arg(kw.value)
        l0, l1 = self._span(node)
        self.events.append(
            SyntaxEvent(
                EventKind.CALL, l0, l1, eid=eid, callee_path=dotted_name(func) or "?",
                args=tuple(self.arg(a.value if isinstance(a, ast.Starred) else a) for a in node.args),
                kwargs=kwargs, text_excerpt=self.src.excerpt(node),
                flags=frozenset({"in_test"}) if self._in_test else frozenset(),
                **ctx,
            )
        )

    def _string_event(self, node: ast.AST, value: ArgValue, flags: set[str]) -> None:
        ctx = self._context()
        seg = self.src.segment(node)
        if seg.lstrip("rRbBuUfF")[:3] in ('"""', "'''"):
            flags.add("triple")
        l0, l1 = self._span(node)
        self.events.append(
            SyntaxEvent(
                EventKind.STRING, l0, l1, eid=self._eid(), value=value, text_excerpt=seg[:EXCERPT_LIMIT],
                flags=frozenset(flags), **ctx,
            )
        )

    def visit_Constant(self, node: ast.Constant) -> None:
        if isinstance(node.value, (str, bytes)):
            self._string_event(node, self.arg(node), set())

    def visit_JoinedStr(self, node: ast.JoinedStr) -> None:
        self._string_event(node, self.arg(node), {"fstring"})
        for part in node.values:
            if isinstance(part, ast.FormattedValue):
                self.visit(part.value)
                if part.format_spec is not None:
                    self.visit(part.format_spec)

    def visit_Compare(self, node: ast.Compare) -> None:
        self._in_test += 1
        self.generic_visit(node)
        self._in_test -= 1


# --------------------------------------------------------------------------
# entry points


def _common_margin(lines: list[str]) -> int:
    widths = [len(line) - len(line.lstrip(" \t")) for line in lines if line.strip()]
    return min(widths) if widths else 0


def _parse_quiet(text: str) -> ast.AST:
    # scanned code is untrusted; its escape-sequence warnings are noise here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ast.parse(text)


def _structural(text: str, lines: list[str]) -> Optional[tuple[_Extractor, bool]]:
    try:
        tree = _parse_quiet(text)
        margin = 0
    except (SyntaxError, ValueError, RecursionError, MemoryError):
        margin = _common_margin(lines)
        if margin == 0:
            return None
        dedented = "\n".join(line[margin:] if line.strip() else "" for line in lines)
        try:
            tree = _parse_quiet(dedented)
        except (SyntaxError, ValueError, RecursionError, MemoryError):
            return None
    ex = _Extractor(_Lines(lines, margin))
    try:
        ex.visit(tree)
    except RecursionError:
        return None
    return ex, margin > 0


def _finish(
    events: Iterable[SyntaxEvent],
    lines: list[str],
    degraded: bool,
    aliases: Mapping[str, str],
    identifiers: Mapping[str, Iterable[int]],
    rel_path: str,
) -> ParseOutcome:
    ordered = tuple(sorted(events, key=lambda e: (e.line_start, e.eid)))
    outcome = ParseOutcome(
        events=ordered,
        manifest=None,
        parse_degraded=degraded,
        lines=tuple(lines),
        aliases=dict(aliases),
        identifiers={k: tuple(sorted(set(v))) for k, v in identifiers.items()},
        rel_path=rel_path,
    )
    if posixpath.basename(rel_path) == "setup.py":
        object.__setattr__(outcome, "manifest", extract_setup_manifest(outcome))
    return outcome


def parse_source(text: str, rel_path: str = "<memory>") -> ParseOutcome:
    """Parse source text into events. Total: never raises on bad input."""
    if "\x00" in text:
        text = text.replace("\x00", " ")
    if "\r" in text:
        text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    result = _structural(text, lines)
    if result is not None:
        ex, _ = result
        return _finish(ex.events, lines, False, ex.aliases, ex.identifiers, rel_path)

    from malind.lexical import lexical_events

    events, aliases, identifiers = lexical_events(text, lines)
    return _finish(events, lines, True, aliases, identifiers, rel_path)


def _is_setup_call(event: SyntaxEvent, aliases: Mapping[str, str]) -> bool:
    if event.kind is not EventKind.CALL or event.enclosing is not Enclosing.MODULE:
        return False
    resolved = resolve_callee(event.callee_path, aliases)
    return resolved in SETUP_ENTRY_POINTS or event.callee_path in SETUP_ENTRY_POINTS


_DICT_CALL_PAIR = re.compile(r"(\w+)\s*=\s*([\w.]+)")


def extract_setup_manifest(outcome: ParseOutcome) -> SetupManifest:
    setup_call = next((e for e in outcome.events if _is_setup_call(e, outcome.aliases)), None)
    if setup_call is None:
        return SetupManifest(present=False)

    kw = setup_call.kwargs
    computed: list[str] = []
    excerpts: dict[str, str] = {}

    def text_field(key: str) -> Optional[str]:
        v = kw.get(key)
        if v is None:
            return None
        excerpts[key] = f"{key}={v.text}"[:EXCERPT_LIMIT]
        if v.kind is ArgKind.STR:
            return v.value
        computed.append(key)
        return None

    name = text_field("name")
    author = text_field("author")
    author_email = text_field("author_email")
    description = text_field("description")

    deps: list[str] = []
    for key in ("install_requires", "setup_requires"):
        v = kw.get(key)
        if v is None:
            continue
        excerpts[key] = f"{key}={v.text}"[:EXCERPT_LIMIT]
        if v.kind is ArgKind.LIST:
            for item in v.items:
                if item.kind is ArgKind.STR:
                    norm = normalize_dist_name(item.value)
                    if norm and norm not in deps:
                        deps.append(norm)
                else:
                    computed.append(key)
        elif v.kind is ArgKind.STR:
            for part in v.value.splitlines():
                norm = normalize_dist_name(part)
                if norm and norm not in deps:
                    deps.append(norm)
        else:
            computed.append(key)

    hooks: list[tuple[str, str]] = []
    cmd = kw.get("cmdclass")
    if cmd is not None:
        excerpts["cmdclass"] = f"cmdclass={cmd.text}"[:EXCERPT_LIMIT]
        if cmd.kind is ArgKind.DICT:
            for k, v in zip(cmd.keys, cmd.items):
                if k.kind is ArgKind.STR:
                    cls = (v.names[0] if v.names else v.text).split(".")[-1]
                    hooks.append((k.value, cls))
        elif cmd.computed and cmd.text.lstrip().startswith("dict("):
            hooks.extend((h, c.split(".")[-1]) for h, c in _DICT_CALL_PAIR.findall(cmd.text))
        else:
            computed.append("cmdclass")

    return SetupManifest(
        present=True,
        name=name,
        author=author,
        author_email=author_email,
        description=description,
        dependencies=tuple(deps),
        cmdclass_hooks=tuple(hooks),
        line_start=setup_call.line_start,
        line_end=setup_call.line_end,
        excerpts=excerpts,
        computed_fields=tuple(dict.fromkeys(computed)),
    )
