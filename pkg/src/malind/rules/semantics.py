"""Per-file analysis helpers: callee classes, value flow and sinks.

Value flow is deliberately shallow. A name is followed to the most recent
assignment of that name in the same file, a few hops deep, and nothing is
evaluated. That is enough to connect ``url = "..."`` with a later
``requests.get(url)``, which is how most droppers are written.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from malind.rules.config import RuleConfig
from malind.rules.urls import find_urls
from malind.syntax import (
    ArgKind,
    ArgValue,
    Enclosing,
    EventKind,
    ParseOutcome,
    SyntaxEvent,
    demangle,
    resolve_callee,
)

MAX_FLOW_DEPTH = 4

EXEC_CALLS = {"exec", "eval", "compile", "builtins.exec", "builtins.eval", "builtins.compile"}
EXEC_LIKE = EXEC_CALLS | {"execfile", "runpy.run_path", "runpy.run_module", "code.InteractiveInterpreter().runsource"}

PROCESS_CALLS = {
    "os.system", "os.popen", "os.startfile", "os.execv", "os.execve", "os.execl", "os.execle", "os.execlp",
    "os.execvp", "os.execvpe", "os.spawnl", "os.spawnle", "os.spawnlp", "os.spawnv", "os.spawnve", "os.spawnvp",
    "os.posix_spawn", "os.posix_spawnp", "subprocess.Popen", "subprocess.call", "subprocess.run",
    "subprocess.check_call", "subprocess.check_output", "subprocess.getoutput", "subprocess.getstatusoutput",
    "commands.getoutput", "commands.getstatusoutput", "pty.spawn", "asyncio.create_subprocess_shell",
    "asyncio.create_subprocess_exec", "win32api.ShellExecute", "win32api.WinExec",
    "ctypes.windll.shell32.ShellExecuteW", "ctypes.windll.shell32.ShellExecuteA",
}
# unresolved bare names that are process launchers when imported with "from ... import"
BARE_PROCESS = {"system", "popen", "Popen", "call", "check_call", "check_output", "getoutput", "startfile", "ShellExecute"}
SHELL_CALLS = {
    "os.system", "os.popen", "commands.getoutput", "commands.getstatusoutput", "subprocess.getoutput",
    "subprocess.getstatusoutput", "asyncio.create_subprocess_shell",
}
SUBPROCESS_FAMILY = {"subprocess.Popen", "subprocess.call", "subprocess.run", "subprocess.check_call", "subprocess.check_output"}

NETWORK_CALLS = {
    "urllib.request.urlopen", "urllib.request.urlretrieve", "urllib.request.Request", "urllib.urlopen",
    "urllib.urlretrieve", "urllib2.urlopen", "urllib2.Request", "urlopen", "urlretrieve", "Request",
    "wget.download", "http.client.HTTPConnection", "http.client.HTTPSConnection", "httplib.HTTPConnection",
    "httplib.HTTPSConnection", "aiohttp.request", "socket.create_connection", "pycurl.Curl", "ftplib.FTP",
    "smtplib.SMTP", "smtplib.SMTP_SSL", "telnetlib.Telnet", "websocket.create_connection", "dns.resolver.resolve",
    "dns.resolver.query", "socket.gethostbyname", "socket.gethostbyname_ex", "socket.getaddrinfo",
    "urllib3.PoolManager().request", "urllib3.request",
}
HTTP_VERBS = {"get", "post", "put", "patch", "delete", "head", "request", "options"}
HTTP_MODULES = ("requests", "httpx", "aiohttp", "urllib3")
NETWORK_RECEIVER = re.compile(r"(?i)(session|client|http|requests|httpx|api|bot|conn|opener|pool)")
DOWNLOAD_VERBS = {"get", "urlopen", "urlretrieve", "download", "request", "Request", "stream"}

IMPORT_CALLS = {"__import__", "importlib.import_module", "import_module", "importlib.__import__"}

DECODE_CALLS = {
    "base64.b64decode", "base64.b32decode", "base64.b16decode", "base64.b85decode", "base64.a85decode",
    "base64.urlsafe_b64decode", "base64.decodebytes", "base64.decodestring", "base64.standard_b64decode",
    "binascii.unhexlify", "binascii.a2b_base64", "binascii.a2b_hex", "bytes.fromhex", "bytearray.fromhex",
    "codecs.decode", "zlib.decompress", "gzip.decompress", "bz2.decompress", "lzma.decompress", "marshal.loads",
    "b64decode", "b32decode", "b16decode", "unhexlify", "decompress", "urlsafe_b64decode", "a2b_base64",
}
DELETE_CALLS = {"os.remove", "os.unlink", "shutil.rmtree", "os.rmdir", "os.removedirs"}
DELETE_LAST = {"remove", "unlink", "rmtree"}
MOVE_CALLS = {"os.rename", "os.replace", "shutil.move", "os.renames"}
COPY_CALLS = {"shutil.copy", "shutil.copy2", "shutil.copyfile", "shutil.copytree", "shutil.copyfileobj", "os.symlink", "os.link"}
MKDIR_CALLS = {"os.makedirs", "os.mkdir"}
WRITE_LAST = {"write", "writelines", "write_text", "write_bytes"}
ENUM_CALLS = {"os.listdir", "os.scandir", "os.walk", "glob.glob", "glob.iglob", "listdir", "scandir"}
ENUM_LAST = {"iterdir", "rglob"}
SYSINFO_CALLS = {
    "os.getlogin", "getpass.getuser", "socket.gethostname", "socket.getfqdn", "platform.node", "platform.platform",
    "platform.system", "platform.uname", "platform.machine", "platform.version", "platform.release",
    "platform.processor", "os.uname", "uuid.getnode", "psutil.users", "psutil.net_if_addrs", "psutil.cpu_count",
    "psutil.virtual_memory", "psutil.disk_partitions", "os.getuid", "getlogin", "gethostname", "getuser",
    "locale.getdefaultlocale", "win32api.GetUserName", "win32api.GetComputerName",
}
SENSITIVE_ENV_RE = re.compile(
    r"(?i)\b(USERNAME|USER|LOGNAME|COMPUTERNAME|HOSTNAME|USERDOMAIN|USERPROFILE|PROCESSOR_IDENTIFIER)\b"
)
OPEN_CALLS = {"open", "io.open", "codecs.open", "builtins.open"}

BINARY_PATH_RE = re.compile(r"(?i)[\w\-. \\/:{}]*\.(exe|dll|bin|so|scr|msi|elf)\b")
SECRET_NAME_RE = re.compile(r"(?i)(token|passw|secret|cookie|credential|api_?key|private_?key|(^|_)key(s)?($|_))")
ENV_NAMES = {"os.environ", "environ", "os.getenv", "getenv", "os.environb"}


def _base(name: str) -> str:
    return re.split(r"[.\[(]", name, maxsplit=1)[0]


@dataclass
class Flow:
    """What a value can be traced back to inside one file."""

    strings: list[str] = field(default_factory=list)
    calls: list[SyntaxEvent] = field(default_factory=list)
    names: set[str] = field(default_factory=set)
    computed: bool = False

    def merge(self, other: "Flow") -> None:
        self.strings.extend(other.strings)
        seen = {c.eid for c in self.calls}
        self.calls.extend(c for c in other.calls if c.eid not in seen)
        self.names |= other.names
        self.computed = self.computed or other.computed

    @property
    def text(self) -> str:
        return "\n".join(self.strings)

    def urls(self) -> list[str]:
        out: list[str] = []
        for s in self.strings:
            for u in find_urls(s):
                if u not in out:
                    out.append(u)
        return out


@dataclass(frozen=True)
class PackageContext:
    package_id: str = ""
    # classes registered through setup(cmdclass=...) anywhere in the package
    hook_classes: frozenset[str] = frozenset()
    # top-level module names imported by any source file of the package
    imported: frozenset[str] = frozenset()


class FileContext:
    def __init__(self, outcome: ParseOutcome, rel_path: str, config: RuleConfig, package: PackageContext):
        self.outcome = outcome
        self.rel_path = rel_path
        self.basename = rel_path.rsplit("/", 1)[-1]
        self.config = config
        self.package = package
        self.lines = outcome.lines
        self.degraded = outcome.parse_degraded
        self.is_root_setup = rel_path == "setup.py"
        self.is_init = self.basename == "__init__.py"
        self.events = outcome.events
        self.by_eid = {e.eid: e for e in self.events}
        self.children: dict[int, list[SyntaxEvent]] = defaultdict(list)
        for e in self.events:
            if e.parent is not None:
                self.children[e.parent].append(e)
        self.calls = [e for e in self.events if e.kind is EventKind.CALL]
        self.strings = [e for e in self.events if e.kind is EventKind.STRING]
        self.assigns = [e for e in self.events if e.kind is EventKind.ASSIGNMENT]
        self.handlers = [e for e in self.events if e.kind is EventKind.TRY_HANDLER]
        self.classes = [e for e in self.events if e.kind is EventKind.CLASSDEF]
        self.bindings: dict[str, list[SyntaxEvent]] = defaultdict(list)
        for a in self.assigns:
            for t in a.targets:
                for part in t.split(","):
                    part = part.strip()
                    if re.fullmatch(r"[A-Za-z_]\w*", part):
                        self.bindings[part].append(a)
        self._callee: dict[int, str] = {}
        self._flow_cache: dict[tuple[int, int], Flow] = {}
        self.setup_eid: Optional[int] = None
        if outcome.manifest is not None and outcome.manifest.present:
            for c in self.calls:
                if c.line_start == outcome.manifest.line_start and self.last(c) == "setup" and c.enclosing is Enclosing.MODULE:
                    self.setup_eid = c.eid
                    break

    # -- callee names -----------------------------------------------------------

    def callee(self, e: SyntaxEvent) -> str:
        cached = self._callee.get(e.eid)
        if cached is None:
            path = resolve_callee(e.callee_path, self.outcome.aliases)
            parts = path.split(".")
            parts[-1] = demangle(parts[-1])
            if len(parts) > 1 and parts[0].startswith("_") and parts[0] not in self.outcome.aliases:
                parts[0] = demangle(parts[0])
            cached = ".".join(parts)
            self._callee[e.eid] = cached
        return cached

    def last(self, e: SyntaxEvent) -> str:
        return self.callee(e).rsplit(".", 1)[-1]

    def receiver(self, e: SyntaxEvent) -> str:
        path = self.callee(e)
        return path.rsplit(".", 1)[0] if "." in path else ""

    # -- structure ----------------------------------------------------------------

    def ancestors(self, e: SyntaxEvent) -> Iterator[SyntaxEvent]:
        seen = set()
        cur = e.parent
        while cur is not None and cur not in seen:
            seen.add(cur)
            parent = self.by_eid.get(cur)
            if parent is None:
                return
            yield parent
            cur = parent.parent

    def descendants(self, eid: int) -> list[SyntaxEvent]:
        out, stack, seen = [], [eid], {eid}
        while stack:
            for ch in self.children.get(stack.pop(), ()):
                if ch.eid not in seen:
                    seen.add(ch.eid)
                    out.append(ch)
                    stack.append(ch.eid)
        return out

    def inside_setup_call(self, e: SyntaxEvent) -> bool:
        return self.setup_eid is not None and any(a.eid == self.setup_eid for a in self.ancestors(e))

    def receiver_call(self, e: SyntaxEvent) -> Optional[SyntaxEvent]:
        for ch in self.children.get(e.eid, ()):
            if ch.kind is EventKind.CALL and ch.role == "receiver":
                return ch
        return None

    # -- value flow -----------------------------------------------------------------

    def binding(self, name: str, line: int) -> Optional[SyntaxEvent]:
        cands = self.bindings.get(name)
        if not cands:
            return None
        before = [a for a in cands if a.line_start < line]
        if before:
            return before[-1]
        same = [a for a in cands if a.line_start <= line]
        return same[-1] if same else cands[0]

    def flow(self, av: Optional[ArgValue], line: int, depth: int = 0) -> Flow:
        if av is None:
            return Flow()
        key = (id(av), line)
        cached = self._flow_cache.get(key)
        if cached is not None:
            return cached
        out = Flow(strings=list(av.strings()), names=set(av.all_names()), computed=av.computed)
        for eid in av.all_calls():
            call = self.by_eid.get(eid)
            if call is None:
                continue
            for c in [call, *self.descendants(eid)]:
                if c.kind is EventKind.CALL and all(c.eid != x.eid for x in out.calls):
                    out.calls.append(c)
        if depth < MAX_FLOW_DEPTH:
            for name in list(out.names):
                b = self.binding(_base(name), line)
                if b is not None and b.value is not None and b.line_start <= line + 1:
                    out.merge(self.flow(b.value, b.line_start, depth + 1))
        self._flow_cache[key] = out
        return out

    def call_flow(self, e: SyntaxEvent, include_kwargs: bool = True) -> Flow:
        out = Flow()
        for a in e.args:
            out.merge(self.flow(a, e.line_start))
        if include_kwargs:
            for v in e.kwargs.values():
                out.merge(self.flow(v, e.line_start))
        return out

    def target_flow(self, e: SyntaxEvent) -> Flow:
        """Flow of the URL / command / path argument of a call."""
        for key in ("url", "uri", "args", "cmd", "command", "path", "file", "src", "dst"):
            if key in e.kwargs and not e.args:
                return self.flow(e.kwargs[key], e.line_start)
        if e.args:
            return self.flow(e.args[0], e.line_start)
        rc = self.receiver_call(e)
        if rc is not None:
            return self.target_flow(rc)
        return Flow()

    def arg_at(self, e: SyntaxEvent, idx: int, *names: str) -> Optional[ArgValue]:
        if len(e.args) > idx:
            return e.args[idx]
        for n in names:
            if n in e.kwargs:
                return e.kwargs[n]
        return None

    # -- classes of calls -----------------------------------------------------------

    def is_exec(self, e: SyntaxEvent) -> bool:
        return self.callee(e) in EXEC_CALLS

    def is_exec_like(self, e: SyntaxEvent) -> bool:
        return self.callee(e) in EXEC_LIKE

    def is_process(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        if p in PROCESS_CALLS:
            return True
        if "." not in p and p in BARE_PROCESS:
            return True
        return p.endswith((".ShellExecuteW", ".ShellExecuteA", ".WinExec"))

    def is_shell(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        return p in SHELL_CALLS or ("." not in p and p in {"system", "popen"})

    def is_dynamic_import(self, e: SyntaxEvent) -> bool:
        return self.callee(e) in IMPORT_CALLS

    def is_socket_connect(self, e: SyntaxEvent) -> bool:
        last = self.last(e)
        if last == "create_connection":
            return True
        if last not in ("connect", "connect_ex") or not e.args:
            return False
        a = e.args[0]
        return a.kind is ArgKind.LIST and len(a.items) >= 2

    def is_network(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        if p in NETWORK_CALLS or self.is_socket_connect(e):
            return True
        last = p.rsplit(".", 1)[-1]
        recv = p.rsplit(".", 1)[0] if "." in p else ""
        if last in HTTP_VERBS and recv:
            root = recv.split(".")[0]
            if root in HTTP_MODULES or NETWORK_RECEIVER.search(recv):
                return True
            first = self.arg_at(e, 0, "url")
            if first is not None and self.flow(first, e.line_start).urls():
                return True
        if last in ("urlopen", "urlretrieve", "send_message", "sendMessage", "send_document", "send_photo"):
            return True
        return False

    def is_download(self, e: SyntaxEvent) -> bool:
        if not self.is_network(e) or self.is_socket_connect(e):
            return False
        last = self.last(e)
        return last in DOWNLOAD_VERBS or self.callee(e) == "wget.download"

    def is_execution_class(self, e: SyntaxEvent) -> bool:
        return (
            self.is_exec_like(e)
            or self.is_process(e)
            or self.is_network(e)
            or self.is_dynamic_import(e)
        )

    def is_decode(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        if p in DECODE_CALLS:
            if p == "codecs.decode":
                enc = self.arg_at(e, 1, "encoding")
                return enc is not None and enc.is_text and re.search(r"(?i)hex|base64|rot|zip|bz2", enc.value or "") is not None
            return True
        last = p.rsplit(".", 1)[-1]
        if last in ("b64decode", "b32decode", "b16decode", "unhexlify", "urlsafe_b64decode", "fromhex"):
            return True
        if last == "decode" and e.args and e.args[0].is_text and re.search(r"(?i)hex|base64|rot13|rot_13|zlib", e.args[0].value):
            return True
        return False

    def open_mode(self, e: SyntaxEvent) -> Optional[str]:
        if self.callee(e) not in OPEN_CALLS and not self.callee(e).endswith(".open"):
            return None
        mode = self.arg_at(e, 1, "mode")
        if mode is None:
            return "r"
        return mode.value if mode.is_text else "?"

    def is_open_write(self, e: SyntaxEvent) -> bool:
        mode = self.open_mode(e)
        return mode is not None and any(c in mode for c in "wax+")

    def handle_is_write(self, e: SyntaxEvent) -> bool:
        """Receiver of ``e`` is a file opened for writing (directly or via a name)."""
        rc = self.receiver_call(e)
        if rc is not None:
            return self.is_open_write(rc)
        recv = self.receiver(e)
        if not recv or "." in recv:
            return False
        b = self.binding(recv, e.line_start)
        if b is None or b.value is None:
            return False
        return any(self.is_open_write(c) for c in self.flow(b.value, b.line_start).calls)

    def is_write(self, e: SyntaxEvent) -> bool:
        last = self.last(e)
        if last in WRITE_LAST:
            recv = self.receiver(e)
            return recv not in ("sys.stdout", "sys.stderr", "self.stdout", "self.stderr")
        return self.callee(e) in ("shutil.copyfileobj",) or self.is_open_write(e)

    def is_delete(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        return p in DELETE_CALLS or (self.last(e) in DELETE_LAST and "." in p and not p.startswith(("list", "self.")))

    def is_move(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        return p in MOVE_CALLS or (self.last(e) in ("rename", "replace") and self.receiver(e) not in ("", "str") and bool(e.args) and not self.receiver(e).endswith("()") and p not in ("str.replace",) and self._path_like_receiver(e))

    def _path_like_receiver(self, e: SyntaxEvent) -> bool:
        recv = self.receiver(e)
        if recv in ("os", "shutil", "os.path"):
            return True
        # Path(...).rename(dst) and p.rename(dst); a string .replace takes two args
        rc = self.receiver_call(e)
        if rc is not None:
            return self.last(rc) in ("Path", "PurePath")
        return self.last(e) == "rename"

    def is_copy(self, e: SyntaxEvent) -> bool:
        return self.callee(e) in COPY_CALLS

    def is_mkdir(self, e: SyntaxEvent) -> bool:
        return self.callee(e) in MKDIR_CALLS or self.last(e) == "mkdir"

    def is_enumeration(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        return p in ENUM_CALLS or (self.last(e) in ENUM_LAST and "." in p)

    def is_sysinfo(self, e: SyntaxEvent) -> bool:
        p = self.callee(e)
        if p in SYSINFO_CALLS:
            return True
        if p in ("os.environ.get", "os.getenv", "environ.get", "getenv"):
            first = self.arg_at(e, 0, "key")
            return first is not None and first.is_text and SENSITIVE_ENV_RE.fullmatch(first.value or "") is not None
        return False

    def is_sensitive(self, e: SyntaxEvent) -> bool:
        return (
            self.is_execution_class(e)
            or self.is_write(e)
            or self.is_delete(e)
            or self.is_decode(e)
            or self.is_move(e)
            or self.is_enumeration(e)
            or self.is_sysinfo(e)
        )

    # -- sinks --------------------------------------------------------------------

    def consumers(self, e: SyntaxEvent, depth: int = 0) -> list[SyntaxEvent]:
        """Calls that receive the value produced by ``e``: enclosing calls and,
        through an assignment, later calls that read the bound name."""
        out = list(self.ancestors(e))
        if depth >= 2:
            return out
        chain = {e.eid} | {a.eid for a in out}
        for a in self.assigns:
            if a.value is None:
                continue
            produced = bool(set(a.value.all_calls()) & chain)
            if not produced and e.parent is None and e.kind is EventKind.STRING:
                produced = a.line_start <= e.line_start <= a.line_end
            if not produced:
                continue
            for t in a.targets:
                name = t.strip()
                if not re.fullmatch(r"[A-Za-z_]\w*", name):
                    continue
                for c in self.calls:
                    if c.line_start < a.line_start or c.eid in chain:
                        continue
                    direct = [n for av in (*c.args, *c.kwargs.values()) for n in av.all_names()]
                    if self.receiver(c):
                        direct.append(self.receiver(c))
                    if name in {_base(n) for n in direct}:
                        out.append(c)
                        out.extend(self.consumers(c, depth + 1))
        return out

    def literal_input(self, av: Optional[ArgValue], line: int) -> bool:
        """``av`` is a literal, or a name chain that ends at a literal, with no live input."""
        if av is None:
            return False
        if av.is_text:
            return True
        fl = self.flow(av, line)
        if not fl.strings:
            return False
        runtime = [c for c in fl.calls if self.is_network(c) or self.callee(c) in ("input", "sys.stdin.read", "open")]
        return not runtime

    # -- text helpers ---------------------------------------------------------------

    def span_text(self, start: int, end: int) -> str:
        return " ".join(line.strip() for line in self.lines[start - 1 : end] if line.strip())

    def name_lines(self) -> Iterable[tuple[str, tuple[int, ...]]]:
        return self.outcome.identifiers.items()
