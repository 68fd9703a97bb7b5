"""One detector per indicator.

Statement detectors take a :class:`FileContext` and yield :class:`Hit`
objects. Manifest detectors read the setup manifest of the root
``setup.py``. MET-005 and the finding-aware half of DEF-006 need results
from the other rules and are run by the engine afterwards.
"""

from __future__ import annotations

import re
from typing import Callable, Iterable, Iterator, Optional

from malind.rules.model import Confidence, Hit
from malind.rules.names import (
    closest_popular,
    combosquat_base,
    duplicate_token_ratio,
    homoglyph_match,
    normalize_name,
    randomness_score,
)
from malind.rules.semantics import (
    ENV_NAMES,
    SECRET_NAME_RE,
    SUBPROCESS_FAMILY,
    FileContext,
    Flow,
    _base,
)
from malind.rules.urls import (
    ARCHIVE_EXT,
    BINARY_EXT,
    SCRIPT_EXT,
    UrlClass,
    classify_url,
    has_rare_tld,
    is_ip_literal,
    is_loopback,
    is_trusted,
    split_url,
    url_path_ext,
)
from malind.syntax import ArgKind, ArgValue, Enclosing, EventKind, SetupManifest, SyntaxEvent, looks_base64, split_excerpt

STRONG = Confidence.STRONG
HEURISTIC = Confidence.HEURISTIC

StatementRule = Callable[[FileContext], Iterable[Hit]]

PAYLOAD_KWARGS = {"data", "json", "params", "files", "body", "text", "content", "payload", "message", "caption"}
MESSAGE_CALLS = {"send_message", "sendMessage", "send_document", "sendDocument", "send_photo", "sendPhoto", "send_file"}

OS_GUARD_RE = re.compile(r"\b(os\.name|sys\.platform|platform\.\w+|os\.uname)\b")
BINARY_RE = re.compile(r"(?i)(?:^|[\s'\"\\/=])[^\s'\"]*\.(exe|dll|bin|so|scr|msi|elf)(?=$|[\s'\"?])")
HIDDEN_RE = re.compile(r"(?i)(pythonw|\bw\.exe\b|^\s*start\s|[\s\"'](start)\s+(/b|/min|\"\"|\S+\.exe)|-w(indowstyle)?\s+hidden|\bSW_HIDE\b)")
HIDDEN_NAMES = {"CREATE_NO_WINDOW", "DETACHED_PROCESS", "STARTF_USESHOWWINDOW", "SW_HIDE", "CREATE_NEW_CONSOLE", "pythonw"}
PIP_RE = re.compile(r"(?i)\bpip3?(\.exe)?\s+install\b|-m\s+pip\b")
SCRIPT_RE = re.compile(r"(?i)(?:^|[\s'\"\\/=])([\w\-.\\/:~]*\w\.(py|pyw|sh|ps1|bat|cmd|vbs|js))(?=$|[\s'\"])")
MOVE_CMD_RE = re.compile(r"(?i)(^|[\s&;|/\"'])(move|mv|copy|cp|xcopy|robocopy|ren|rename|del|rm)\s")
DNS_CMD_RE = re.compile(r"(?i)(^|[\s\"'])(ping|nslookup|dig|host)\s")
REG_RUN_RE = re.compile(r"(?i)\breg(?:\.exe)?\s+add\b.*?\\\s*Run(Once)?\b|\bsetx\b")
ENV_TARGET_RE = re.compile(
    r"environ\s*\[\s*['\"](PATH|LD_PRELOAD|LD_LIBRARY_PATH|PYTHONPATH|PYTHONSTARTUP|DYLD_INSERT_LIBRARIES|PATHEXT)['\"]"
)
PERSIST_ENV = {"PATH", "LD_PRELOAD", "LD_LIBRARY_PATH", "PYTHONPATH", "PYTHONSTARTUP", "DYLD_INSERT_LIBRARIES", "PATHEXT"}
AUTOSTART_RE = re.compile(
    r"(?i)(\.bashrc|\.bash_profile|\.zshrc|\.zprofile|(^|[\\/~])\.profile\b|LaunchAgents|LaunchDaemons|"
    r"Start Menu\\+Programs\\+Startup|Microsoft\\+Windows\\+Start Menu|CurrentVersion\\+Run|"
    r"\.config/autostart|/etc/rc\.local|/etc/init\.d|/etc/cron|crontab|systemd/system)"
)
WALLET_RE = re.compile(
    r"(?i)(exodus|electrum|wallet\.dat|metamask|\.seco\b|passphrase\.json|atomic\\+Local Storage|"
    r"ethereum[\\/]+keystore|coinomi|jaxx|guarda\\|armory\\|nkbihfbeogaeaoehlefnkodbefgpgknn)"
)
LISTING_CMD_RE = re.compile(r"(?i)^\s*(ls|dir|find|tree|Get-ChildItem)(\s|$)")
STORAGE_RE = re.compile(r"(?i)(/storage/emulated/\d|/sdcard\b|/mnt/sdcard)")
ABS_PATH_RE = re.compile(r"(?i)^\s*([a-z]:[\\/]|[\\/]|~|%\w+%|\$\w+|\\\\)")
EXEC_EXT_RE = re.compile(r"(?i)\.(exe|dll|bat|cmd|ps1|vbs|scr|com|msi|pyw)\s*$")
EVIDENCE_EXT_RE = re.compile(r"(?i)\.(exe|dll|py|pyw|bat|cmd|ps1|vbs|sh|log|scr|msi|zip)\b")
DELETE_CMD_RE = re.compile(r"(?i)(^|[\s&;|\"'])(del|erase|rm|rmdir)\s+(-\w+\s+|/\w\s+)*\S")
PROTECTED_RE = re.compile(
    r"(?i)(System32|SysWOW64|Program Files|[a-z]:\\+Windows\\|ProgramData|AppData\\+Roaming\\+Microsoft\\+Windows\\+Start Menu|"
    r"Start Menu\\+Programs\\+Startup|(^|[\s'\"])/etc/|/usr/(local/)?s?bin|/usr/lib|LaunchDaemons|/Library/LaunchAgents|"
    r"/boot/|/var/spool/cron|/root/)"
)
MINER_RE = re.compile(
    r"(?i)(stratum\+(tcp|ssl|tls)://|\bnicehash\b|\bxmrig\b|--donate-level|\bminerd\b|\bcpuminer\b|\bethminer\b|"
    r"\bnanominer\b|\bt-rex\b|mining[-_ ]?pool|--coin\s+\w+|\brx/0\b)"
)
INSECURE_RE = re.compile(r"(?i)(verify\s*=\s*False|_create_unverified_context|CERT_NONE|\bcurl\b[^\n]*\s(-k|--insecure)\b|\bwget\b[^\n]*--no-check-certificate)")
CODE_RE = re.compile(
    r"(\bimport\s+[A-Za-z_]|\bexec\s*\(|\beval\s*\(|\burlopen\s*\(|__import__\s*\(|\bsubprocess\.\w+\s*\(|\bos\.system\s*\(|\bcompile\s*\()"
)
IMPORT_IN_STRING_RE = re.compile(r"\b(import\s+[A-Za-z_]|from\s+[\w.]+\s+import\b|__import__\s*\()")
EXEC_IN_STRING_RE = re.compile(r"\b(exec|eval)\s*\(")
DEVNULL_RE = re.compile(r"(?i)2>\s*(/dev/null|nul\b)|&>\s*/dev/null")
ART_MIN_NONSPACE = 20
EXTRACT_CALLS = {"zipfile.ZipFile", "tarfile.open", "shutil.unpack_archive", "ZipFile", "py7zr.SevenZipFile", "rarfile.RarFile"}
EXTRACT_LAST = {"extractall", "extract", "unpack_archive"}
REVERSE_SHELL_RE = re.compile(r"(?i)(/bin/(ba)?sh|\bbash\b|\bsh\b|cmd\.exe|powershell)")


def _hit(ctx: FileContext, indicator: str, start: int, end: int, conf: Confidence = STRONG) -> Hit:
    end = max(start, min(end, len(ctx.lines) or start))
    if ctx.degraded:
        conf = HEURISTIC
    return Hit(indicator, start, end, split_excerpt(ctx.lines, start, end), conf)


def _ev(ctx: FileContext, indicator: str, e: SyntaxEvent, conf: Confidence = STRONG) -> Hit:
    return _hit(ctx, indicator, e.line_start, e.line_end, conf)


def _flat(strings: Iterable[str]) -> str:
    return " ".join(strings)


def _urls(ctx: FileContext, e: SyntaxEvent) -> list[str]:
    """URLs reachable from the arguments of a call or of its receiver chain."""
    fl = ctx.call_flow(e)
    rc = ctx.receiver_call(e)
    while rc is not None:
        fl.merge(ctx.call_flow(rc))
        rc = ctx.receiver_call(rc)
    return fl.urls()


def _net_calls(ctx: FileContext) -> Iterator[SyntaxEvent]:
    for e in ctx.calls:
        if ctx.is_network(e):
            yield e


def _has_payload(ctx: FileContext, e: SyntaxEvent) -> bool:
    if any(k in PAYLOAD_KWARGS for k in e.kwargs):
        return True
    if len(e.args) >= 2:
        return True
    first = ctx.arg_at(e, 0, "url")
    if first is not None and first.computed and first.all_names():
        return True
    return any("?" in u for u in _urls(ctx, e))


def _consumer_kinds(ctx: FileContext, e: SyntaxEvent) -> set[str]:
    out = set()
    for c in ctx.consumers(e):
        if ctx.is_exec_like(c):
            out.add("exec")
        if ctx.is_process(c):
            out.add("process")
        if ctx.is_dynamic_import(c):
            out.add("import")
        if ctx.is_network(c):
            out.add("network")
        if ctx.is_write(c):
            out.add("write")
    return out


def _string_text(e: SyntaxEvent) -> str:
    return "".join(e.value.strings()) if e.value is not None else ""


def _process_text(ctx: FileContext, e: SyntaxEvent) -> str:
    return _flat(s for s in ctx.target_flow(e).strings)


# ---------------------------------------------------------------------------
# Execution stage


def exs_001(ctx: FileContext) -> Iterator[Hit]:
    if not ctx.is_init:
        return
    for e in ctx.calls:
        if e.enclosing is Enclosing.MODULE and ctx.is_execution_class(e):
            yield _ev(ctx, "EXS-001", e)


def exs_002(ctx: FileContext) -> Iterator[Hit]:
    if not ctx.is_root_setup:
        return
    for e in ctx.calls:
        if e.enclosing is Enclosing.MODULE and ctx.is_execution_class(e) and not ctx.inside_setup_call(e):
            yield _ev(ctx, "EXS-002", e)


def exs_003(ctx: FileContext) -> Iterator[Hit]:
    for cls in ctx.classes:
        if "hook" not in cls.flags or cls.name not in ctx.package.hook_classes:
            continue
        body = [e for e in ctx.events if e.enclosing is Enclosing.HOOK_RUN and e.class_name == cls.name]
        if body:
            yield _ev(ctx, "EXS-003", cls)


# ---------------------------------------------------------------------------
# Execution mechanism


def exm_001(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_exec(e) and e.args and (e.args[0].computed or e.args[0].is_text):
            yield _ev(ctx, "EXM-001", e)


def exm_002(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if not (ctx.is_execution_class(e) or ctx.is_exec(e)):
            continue
        os_guards = [line for line, text in e.guards if OS_GUARD_RE.search(text)]
        if os_guards:
            yield _hit(ctx, "EXM-002", min(os_guards), e.line_end)


def _bytes_written_names(ctx: FileContext) -> set[str]:
    out = set()
    for e in ctx.calls:
        if ctx.last(e) in ("write", "write_bytes") and e.args and e.args[0].kind is ArgKind.BYTES:
            recv = ctx.receiver(e)
            if recv:
                out.add(_base(recv))
    return out


def exm_003(ctx: FileContext) -> Iterator[Hit]:
    written = _bytes_written_names(ctx)
    for e in ctx.calls:
        if not ctx.is_process(e):
            continue
        fl = ctx.call_flow(e)
        local = [s for s in fl.strings if "://" not in s]
        if any(BINARY_RE.search(s) for s in local):
            yield _ev(ctx, "EXM-003", e)
        elif written & {_base(n) for n in fl.names}:
            yield _ev(ctx, "EXM-003", e)


def exm_004(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if not ctx.is_process(e):
            continue
        if "startupinfo" in e.kwargs:
            yield _ev(ctx, "EXM-004", e)
            continue
        fl = ctx.call_flow(e)
        names = {n.rsplit(".", 1)[-1] for n in fl.names}
        if names & HIDDEN_NAMES or any(HIDDEN_RE.search(s) for s in fl.strings):
            yield _ev(ctx, "EXM-004", e)


def exm_005(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_dynamic_import(e) and e.args and e.args[0].computed:
            yield _ev(ctx, "EXM-005", e)
    for s in ctx.strings:
        text = _string_text(s)
        if IMPORT_IN_STRING_RE.search(text) and EXEC_IN_STRING_RE.search(text):
            if _consumer_kinds(ctx, s) & {"exec", "write", "process"}:
                yield _ev(ctx, "EXM-005", s)


def exm_006(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        pip_main = ctx.callee(e) in ("pip.main", "pip._internal.main", "pip._internal.cli.main.main")
        if not (ctx.is_process(e) or pip_main):
            continue
        text = _flat(ctx.call_flow(e).strings)
        if PIP_RE.search(text) or (pip_main and "install" in text):
            yield _ev(ctx, "EXM-006", e)


def exm_007(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if not (ctx.is_process(e) or ctx.callee(e) in ("runpy.run_path", "execfile")):
            continue
        strings = ctx.call_flow(e).strings
        if any(MOVE_CMD_RE.search(s) for s in strings):
            continue
        for s in strings:
            if "://" in s:
                continue
            m = SCRIPT_RE.search(s)
            if m and m.group(1).replace("\\", "/").rsplit("/", 1)[-1] != ctx.basename:
                yield _ev(ctx, "EXM-007", e)
                break


def _shell_true(av: Optional[ArgValue]) -> bool:
    if av is None:
        return False
    if av.kind is ArgKind.CONST:
        return bool(av.value)
    return av.computed or (av.kind is ArgKind.NUM and bool(av.value))


def exm_008(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_shell(e):
            yield _ev(ctx, "EXM-008", e)
            continue
        p = ctx.callee(e)
        family = p in SUBPROCESS_FAMILY or ("." not in p and p in {"Popen", "call", "check_call", "check_output"})
        if not family:
            continue
        if _shell_true(e.kwargs.get("shell")):
            yield _ev(ctx, "EXM-008", e)
        elif "shell" not in e.kwargs and e.args and (e.args[0].is_text or (e.args[0].computed and e.args[0].ops & {"+", "fstring", "format", "%"})):
            yield _ev(ctx, "EXM-008", e)


# ---------------------------------------------------------------------------
# Exfiltration


def _reaches_secret(ctx: FileContext, fl: Flow) -> bool:
    for n in fl.names:
        if n in ENV_NAMES or n.startswith(("os.environ", "environ.")) or n.endswith(".environ"):
            return True
        if SECRET_NAME_RE.search(n.rsplit(".", 1)[-1]) or SECRET_NAME_RE.search(_base(n)):
            return True
    return any(ctx.callee(c) in ("os.getenv", "os.environ.get", "getenv", "os.environ.copy") for c in fl.calls)


def exf_001(ctx: FileContext) -> Iterator[Hit]:
    for e in _net_calls(ctx):
        if ctx.is_socket_connect(e):
            continue
        if _reaches_secret(ctx, ctx.call_flow(e)):
            yield _ev(ctx, "EXF-001", e)


def _reads_file(ctx: FileContext, fl: Flow) -> bool:
    for c in fl.calls:
        if ctx.last(c) in ("read", "read_bytes", "read_text", "readlines"):
            rc = ctx.receiver_call(c)
            if rc is not None and ctx.open_mode(rc) is not None:
                return True
            if ctx.last(c) in ("read_bytes", "read_text"):
                return True
            recv = ctx.receiver(c)
            b = ctx.binding(_base(recv), c.line_start) if recv else None
            if b is not None and b.value is not None and any(ctx.open_mode(x) for x in ctx.flow(b.value, b.line_start).calls):
                return True
        elif ctx.open_mode(c) is not None:
            return True
    return False


def exf_002(ctx: FileContext) -> Iterator[Hit]:
    for e in _net_calls(ctx):
        if "files" in e.kwargs:
            yield _ev(ctx, "EXF-002", e)
            continue
        body = Flow()
        for k in ("data", "json", "body", "document", "content"):
            if k in e.kwargs:
                body.merge(ctx.flow(e.kwargs[k], e.line_start))
        for a in e.args[1:]:
            body.merge(ctx.flow(a, e.line_start))
        if _reads_file(ctx, body):
            yield _ev(ctx, "EXF-002", e)


def exf_003(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_process(e):
            fl = ctx.call_flow(e)
            if not any(DNS_CMD_RE.search(" " + s) for s in fl.strings):
                continue
            built = any(a.computed for a in e.args) or "unclosed" in e.flags
            built = built or any("unclosed" in s.flags for s in ctx.strings if e.line_start <= s.line_start <= e.line_end)
            if built:
                yield _ev(ctx, "EXF-003", e)
        elif ctx.callee(e) in ("socket.gethostbyname", "socket.getaddrinfo", "dns.resolver.resolve", "dns.resolver.query", "gethostbyname"):
            first = ctx.arg_at(e, 0, "qname", "host")
            if first is not None and first.computed and first.ops & {"+", "fstring", "format", "join", "%"}:
                yield _ev(ctx, "EXF-003", e)
    for a in ctx.assigns:
        if a.value is None or not a.value.computed or "+" not in a.value.ops and "fstring" not in a.value.ops:
            continue
        if any(re.search(r"(?i)domain", t) for t in a.targets) and any(re.search(r"(?i)domain|dns", n) for n in a.value.all_names()):
            yield _ev(ctx, "EXF-003", a, HEURISTIC)


def _classed_urls(ctx: FileContext, e: SyntaxEvent, cls: UrlClass) -> list[str]:
    return [u for u in _urls(ctx, e) if classify_url(u, ctx.config) is cls]


def exf_004(ctx: FileContext) -> Iterator[Hit]:
    for e in _net_calls(ctx):
        if _classed_urls(ctx, e, UrlClass.WEBHOOK_API) and _has_payload(ctx, e):
            yield _ev(ctx, "EXF-004", e)
        elif ctx.last(e) in MESSAGE_CALLS and len(e.args) + len(e.kwargs) >= 2:
            yield _ev(ctx, "EXF-004", e, HEURISTIC)


def exf_005(ctx: FileContext) -> Iterator[Hit]:
    for e in _net_calls(ctx):
        if _classed_urls(ctx, e, UrlClass.SUSPICIOUS_LISTED) and _has_payload(ctx, e):
            yield _ev(ctx, "EXF-005", e)


# ---------------------------------------------------------------------------
# System impact


def sys_001(ctx: FileContext) -> Iterator[Hit]:
    for s in ctx.strings:
        if REG_RUN_RE.search(_string_text(s)):
            yield _ev(ctx, "SYS-001", s)
    for e in ctx.calls:
        p = ctx.callee(e)
        if p.endswith("SetValueEx") or p.endswith("SetValue"):
            if re.search(r"(?i)\\Run(Once)?\b", _flat(ctx.call_flow(e).strings)):
                yield _ev(ctx, "SYS-001", e)
        elif p in ("os.putenv", "putenv", "os.environ.setdefault", "os.environ.__setitem__"):
            first = ctx.arg_at(e, 0, "key")
            if first is not None and first.is_text and first.value in PERSIST_ENV:
                yield _ev(ctx, "SYS-001", e)
        elif p == "os.environ.update":
            if any(k.is_text and k.value in PERSIST_ENV for a in e.args for k in a.keys) or PERSIST_ENV & set(e.kwargs):
                yield _ev(ctx, "SYS-001", e)
    for a in ctx.assigns:
        if any(ENV_TARGET_RE.search(t) for t in a.targets):
            yield _ev(ctx, "SYS-001", a)


def _dest_arg(ctx: FileContext, e: SyntaxEvent) -> Optional[ArgValue]:
    return ctx.arg_at(e, 1, "dst", "destination", "target", "dest")


def _write_targets(ctx: FileContext) -> Iterator[tuple[SyntaxEvent, Flow]]:
    """Calls that create or change a file, with the flow of the path they touch."""
    for e in ctx.calls:
        if ctx.is_open_write(e) or ctx.is_mkdir(e):
            yield e, ctx.flow(ctx.arg_at(e, 0, "file", "name", "path"), e.line_start)
        elif ctx.is_move(e) or ctx.is_copy(e):
            yield e, ctx.flow(_dest_arg(ctx, e), e.line_start)
        elif ctx.last(e) in ("write_text", "write_bytes", "touch"):
            rc = ctx.receiver_call(e)
            if rc is not None:
                yield e, ctx.call_flow(rc)


def sys_002(ctx: FileContext) -> Iterator[Hit]:
    for e, fl in _write_targets(ctx):
        if any(AUTOSTART_RE.search(s) for s in fl.strings):
            yield _ev(ctx, "SYS-002", e)
    for e in ctx.calls:
        if ctx.is_process(e) and any(MOVE_CMD_RE.search(s) and AUTOSTART_RE.search(s) for s in ctx.call_flow(e).strings):
            yield _ev(ctx, "SYS-002", e)


def sys_003(ctx: FileContext) -> Iterator[Hit]:
    for s in ctx.strings:
        if WALLET_RE.search(_string_text(s)):
            yield _ev(ctx, "SYS-003", s)


def _outside_tree(ctx: FileContext, fl: Flow) -> bool:
    if any(ABS_PATH_RE.match(s) for s in fl.strings):
        return True
    user_calls = ("os.getenv", "os.environ.get", "os.path.expanduser", "os.path.expandvars", "os.getlogin",
                  "tempfile.gettempdir", "tempfile.mkdtemp", "pathlib.Path.home", "Path.home", "getpass.getuser")
    return any(ctx.callee(c) in user_calls for c in fl.calls) or any(n.startswith("os.environ") for n in fl.names)


def sys_004(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_enumeration(e):
            first = ctx.arg_at(e, 0, "path", "top", "pathname")
            if first is None:
                rc = ctx.receiver_call(e)
                fl = ctx.call_flow(rc) if rc is not None else Flow()
            else:
                fl = ctx.flow(first, e.line_start)
            only_local = "__file__" in {_base(n) for n in fl.names} and not _outside_tree(ctx, fl)
            literal_rel = first is not None and first.is_text and not ABS_PATH_RE.match(first.value)
            if first is None and not fl.strings and not fl.names:
                continue
            if not only_local and not literal_rel:
                yield _ev(ctx, "SYS-004", e)
        elif ctx.is_process(e):
            cmd = ctx.target_flow(e).strings
            if cmd and LISTING_CMD_RE.match(cmd[0]):
                yield _ev(ctx, "SYS-004", e)


def sys_005(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_sysinfo(e) and "in_test" not in e.flags:
            yield _ev(ctx, "SYS-005", e)
    for s in ctx.strings:
        if STORAGE_RE.search(_string_text(s)):
            yield _ev(ctx, "SYS-005", s)


def sys_006(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_move(e):
            fl = ctx.flow(_dest_arg(ctx, e), e.line_start)
            if _outside_tree(ctx, fl) or any(EXEC_EXT_RE.search(s) for s in fl.strings):
                yield _ev(ctx, "SYS-006", e)
        elif ctx.is_process(e):
            for s in ctx.call_flow(e).strings:
                m = MOVE_CMD_RE.search(s)
                if m and m.group(2).lower() in ("move", "mv", "ren", "rename") or (m and EXEC_EXT_RE.search(s)):
                    yield _ev(ctx, "SYS-006", e)
                    break


def _artifact_names(ctx: FileContext, before: int) -> set[str]:
    """Names bound before ``before`` to something the file created or fetched."""
    out = set()
    for a in ctx.assigns:
        if a.line_start >= before or a.value is None:
            continue
        calls = ctx.flow(a.value, a.line_start).calls
        if any(ctx.is_download(c) or ctx.is_open_write(c) for c in calls):
            out.update(_base(t.strip()) for t in a.targets)
    return out


def sys_007(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_delete(e):
            fl = ctx.target_flow(e)
            if any(EVIDENCE_EXT_RE.search(s) for s in fl.strings):
                yield _ev(ctx, "SYS-007", e)
            elif {_base(n) for n in fl.names} & _artifact_names(ctx, e.line_start):
                yield _ev(ctx, "SYS-007", e, HEURISTIC)
        elif ctx.is_process(e):
            if any(DELETE_CMD_RE.search(s) for s in ctx.call_flow(e).strings):
                yield _ev(ctx, "SYS-007", e)


def _content_flow(ctx: FileContext, e: SyntaxEvent) -> Flow:
    fl = Flow()
    for a in e.args:
        fl.merge(ctx.flow(a, e.line_start))
    return fl


def sys_008(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.callee(e) in ("urllib.request.urlretrieve", "urlretrieve", "urllib.urlretrieve", "wget.download"):
            yield _ev(ctx, "SYS-008", e)
            continue
        if ctx.last(e) not in ("write", "writelines", "write_bytes", "write_text") or not ctx.is_write(e):
            continue
        calls = _content_flow(ctx, e).calls
        if any(ctx.is_download(c) or ctx.is_decode(c) or ctx.last(c) in ("decrypt",) for c in calls):
            yield _ev(ctx, "SYS-008", e)


def sys_009(ctx: FileContext) -> Iterator[Hit]:
    for e, fl in _write_targets(ctx):
        if any(PROTECTED_RE.search(s) for s in fl.strings):
            yield _ev(ctx, "SYS-009", e)


# ---------------------------------------------------------------------------
# Network operations


def net_001(ctx: FileContext) -> Iterator[Hit]:
    for e in _net_calls(ctx):
        if _classed_urls(ctx, e, UrlClass.GEOLOCATION_API):
            yield _ev(ctx, "NET-001", e)


def net_002(ctx: FileContext) -> Iterator[Hit]:
    for s in ctx.strings:
        text = _string_text(s)
        if MINER_RE.search(text):
            yield _ev(ctx, "NET-002", s)
    for e in _net_calls(ctx):
        if _classed_urls(ctx, e, UrlClass.MINING_POOL):
            yield _ev(ctx, "NET-002", e)


def _connect_host(e: SyntaxEvent) -> Optional[str]:
    if e.args and e.args[0].kind is ArgKind.LIST and e.args[0].items and e.args[0].items[0].is_text:
        return e.args[0].items[0].value
    return None


def net_003(ctx: FileContext) -> Iterator[Hit]:
    for e in _net_calls(ctx):
        host = _connect_host(e)
        if host is not None:
            if is_ip_literal(host) and not is_loopback(host):
                yield _ev(ctx, "NET-003", e)
            continue
        best: Optional[Confidence] = None
        for u in _urls(ctx, e):
            _, h, _ = split_url(u)
            if not h or is_loopback(h):
                continue
            cls = classify_url(u, ctx.config)
            if cls in (UrlClass.IP_LITERAL, UrlClass.SUSPICIOUS_LISTED) or has_rare_tld(h, ctx.config) or is_ip_literal(h):
                best = STRONG
                break
            if cls is UrlClass.OTHER or cls is UrlClass.PLAIN_HTTP:
                if not is_trusted(h, ctx.config):
                    best = HEURISTIC
        if best is not None:
            yield _ev(ctx, "NET-003", e, best)


def _download_exts(ctx: FileContext, e: SyntaxEvent, exts: tuple[str, ...]) -> bool:
    return any(url_path_ext(u, exts) for u in _urls(ctx, e))


def net_004(ctx: FileContext) -> Iterator[Hit]:
    extract_lines = [
        c.line_start for c in ctx.calls if ctx.callee(c) in EXTRACT_CALLS or ctx.last(c) in EXTRACT_LAST
    ]
    for e in ctx.calls:
        if ctx.is_download(e) and _download_exts(ctx, e, ARCHIVE_EXT):
            later = any(line >= e.line_start for line in extract_lines)
            yield _ev(ctx, "NET-004", e, STRONG if later else HEURISTIC)


def net_005(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_download(e) and _download_exts(ctx, e, BINARY_EXT):
            yield _ev(ctx, "NET-005", e)
        elif ctx.is_process(e) and any(url_path_ext(u, BINARY_EXT) for u in ctx.call_flow(e).urls()):
            yield _ev(ctx, "NET-005", e)


def net_006(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if not ctx.is_download(e):
            continue
        kinds = _consumer_kinds(ctx, e)
        if "exec" in kinds:
            yield _ev(ctx, "NET-006", e)
            continue
        for u in _classed_urls(ctx, e, UrlClass.PASTE_OR_CDN):
            if not url_path_ext(u, BINARY_EXT + SCRIPT_EXT + ARCHIVE_EXT):
                yield _ev(ctx, "NET-006", e, HEURISTIC)
                break


def net_007(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.is_download(e) and _download_exts(ctx, e, SCRIPT_EXT):
            staged = _consumer_kinds(ctx, e) & {"write", "exec", "process"}
            yield _ev(ctx, "NET-007", e, STRONG if staged else HEURISTIC)


def net_008(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if not ctx.is_socket_connect(e) or _connect_host(e) is None:
            continue
        confirm = []
        for c in ctx.calls:
            if c.line_start < e.line_start:
                continue
            if ctx.callee(c) in ("os.dup2", "dup2"):
                confirm.append(c)
            elif ctx.callee(c) in ("pty.spawn", "spawn") or (
                ctx.is_process(c) and any(REVERSE_SHELL_RE.search(s) for s in ctx.call_flow(c).strings)
            ):
                confirm.append(c)
        if confirm:
            yield _hit(ctx, "NET-008", e.line_start, max(c.line_end for c in confirm))


def net_009(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        v = e.kwargs.get("verify")
        if v is not None and v.kind is ArgKind.CONST and v.value is False:
            yield _ev(ctx, "NET-009", e)
        elif ctx.callee(e) in ("ssl._create_unverified_context", "_create_unverified_context"):
            yield _ev(ctx, "NET-009", e)
        elif "cert_reqs" in e.kwargs and "CERT_NONE" in e.kwargs["cert_reqs"].text:
            yield _ev(ctx, "NET-009", e)
    for s in ctx.strings:
        if INSECURE_RE.search(_string_text(s)):
            yield _ev(ctx, "NET-009", s)
    for a in ctx.assigns:
        if a.value is not None and (
            "ssl.CERT_NONE" in a.value.all_names() or "ssl._create_unverified_context" in a.value.all_names()
        ):
            yield _ev(ctx, "NET-009", a)


def net_010(ctx: FileContext) -> Iterator[Hit]:
    for e in _net_calls(ctx):
        for u in _classed_urls(ctx, e, UrlClass.PLAIN_HTTP):
            _, host, _ = split_url(u)
            if not is_loopback(host):
                yield _ev(ctx, "NET-010", e)
                break


# ---------------------------------------------------------------------------
# Defense evasion


def _is_art(text: str, min_lines: int, min_ratio: float) -> bool:
    rows = [r for r in text.splitlines() if r.strip()]
    chars = [c for c in text if not c.isspace()]
    if len(rows) < min_lines or len(chars) < ART_MIN_NONSPACE:
        return False
    return sum(1 for c in chars if not c.isalnum()) / len(chars) >= min_ratio


def def_001(ctx: FileContext) -> Iterator[Hit]:
    th = ctx.config.thresholds
    exec_lines = [c.line_start for c in ctx.calls if ctx.is_execution_class(c)]
    if not exec_lines:
        return
    for e in ctx.calls:
        if ctx.callee(e) not in ("print", "sys.stdout.write"):
            continue
        triples = [s for s in ctx.descendants(e.eid) if s.kind is EventKind.STRING and "triple" in s.flags]
        if not triples:
            continue
        near = any(abs(line - e.line_start) <= th.art_window_lines or e.line_start <= line <= e.line_end for line in exec_lines)
        if not near:
            continue
        art = any(_is_art(_string_text(s), th.art_min_lines, th.art_min_symbol_ratio) for s in triples)
        yield _ev(ctx, "DEF-001", e, STRONG if art else HEURISTIC)


def _statement_span(ctx: FileContext, line: int) -> tuple[int, int]:
    best: Optional[tuple[int, int]] = None
    for e in ctx.events:
        if e.kind in (EventKind.ASSIGNMENT, EventKind.CALL) and e.parent is None and e.line_start <= line <= e.line_end:
            if best is None or e.line_end - e.line_start < best[1] - best[0]:
                best = (e.line_start, e.line_end)
    return best or (line, line)


def _int_list(av: ArgValue, minimum: int) -> bool:
    return (
        av.kind is ArgKind.LIST
        and len(av.items) >= minimum
        and all(i.kind is ArgKind.NUM and isinstance(i.value, int) and 0 <= i.value <= 0x10FFFF for i in av.items)
    )


def def_002(ctx: FileContext) -> Iterator[Hit]:
    th = ctx.config.thresholds
    underscored = {n: lines for n, lines in ctx.name_lines() if len(n) >= 2 and set(n) == {"_"}}
    if len(underscored) >= th.underscore_names_min:
        spans = {_statement_span(ctx, line) for lines in underscored.values() for line in lines}
        for start, end in sorted(spans):
            yield _hit(ctx, "DEF-002", start, end)
    for e in ctx.events:
        if e.kind not in (EventKind.ASSIGNMENT, EventKind.CALL) or e.parent is not None:
            continue
        if len(re.findall(r"\bchr\s*\(", ctx.span_text(e.line_start, e.line_end))) >= th.chr_chain_min:
            yield _ev(ctx, "DEF-002", e)
    for e in ctx.calls:
        last = ctx.last(e)
        int_arg = any(_int_list(a, th.int_list_min) for a in e.args)
        if int_arg and (last in ("bytes", "bytearray") or any(ctx.last(c) == "decode" for c in ctx.ancestors(e))):
            yield _ev(ctx, "DEF-002", e)
        elif last == "map" and e.args and ctx.flow(e.args[0], e.line_start).names & {"chr"} and any(_int_list(a, th.int_list_min) for a in e.args[1:]):
            yield _ev(ctx, "DEF-002", e)
        elif last == "getattr" and len(e.args) >= 2:
            first, second = e.args[0], e.args[1]
            nested = any(ctx.callee(ctx.by_eid[c]) in ("getattr", "__import__", "importlib.import_module") for c in first.calls if c in ctx.by_eid)
            if nested or (second.computed and second.ops & {"+", "join", "fstring", "format", "subscript", "%"}):
                yield _ev(ctx, "DEF-002", e)


def def_003(ctx: FileContext) -> Iterator[Hit]:
    th = ctx.config.thresholds
    for e in ctx.calls:
        if not ctx.is_decode(e):
            continue
        src = ctx.arg_at(e, 0, "s", "data")
        if src is None:
            rc = ctx.receiver_call(e)
            src = rc.args[0] if rc is not None and rc.args else None
        if not ctx.literal_input(src, e.line_start):
            continue
        if _consumer_kinds(ctx, e) & {"exec", "network", "write", "process", "import"}:
            yield _ev(ctx, "DEF-003", e)
    for s in ctx.strings:
        if s.value is not None and s.value.is_text and looks_base64(s.value.value, th.base64_min_chars):
            yield _ev(ctx, "DEF-003", s, HEURISTIC)


def def_004(ctx: FileContext) -> Iterator[Hit]:
    for e in ctx.calls:
        if ctx.last(e) not in ("decrypt", "decrypt_and_verify", "decrypt_at_time"):
            continue
        if not ctx.literal_input(ctx.arg_at(e, 0, "token", "ciphertext", "data"), e.line_start):
            continue
        kinds = _consumer_kinds(ctx, e)
        yield _ev(ctx, "DEF-004", e, STRONG if kinds & {"exec", "import", "process"} else HEURISTIC)


def def_005(ctx: FileContext) -> Iterator[Hit]:
    for s in ctx.strings:
        if CODE_RE.search(_string_text(s)) and _consumer_kinds(ctx, s) & {"exec", "write", "process"}:
            yield _ev(ctx, "DEF-005", s)


def def_006_stderr(ctx: FileContext) -> Iterator[Hit]:
    """Standard error sent to a null device."""
    for e in ctx.calls:
        if not ctx.is_process(e):
            continue
        err = e.kwargs.get("stderr")
        null_kw = err is not None and any(n.endswith(("DEVNULL", "devnull")) for n in ctx.flow(err, e.line_start).names)
        if null_kw or any(DEVNULL_RE.search(s) for s in ctx.call_flow(e).strings):
            yield _ev(ctx, "DEF-006", e)
    sensitive_lines = [c.line_start for c in ctx.calls if ctx.is_sensitive(c)]
    for a in ctx.assigns:
        if "sys.stderr" in a.targets and a.value is not None and any("devnull" in n for n in a.value.all_names()):
            if any(line > a.line_start for line in sensitive_lines):
                yield _ev(ctx, "DEF-006", a, HEURISTIC)


def def_006_handlers(ctx: FileContext, finding_lines: set[int]) -> Iterator[Hit]:
    """Broad, silent handlers whose guarded region holds a sensitive call or a finding."""
    for h in ctx.handlers:
        if "pass_only" not in h.flags or not ("broad" in h.flags or "suppress" in h.flags) or h.region is None:
            continue
        lo, hi = h.region
        risky = any(ctx.is_sensitive(c) for c in ctx.calls if lo <= c.line_start <= hi)
        if risky or any(lo <= line <= hi for line in finding_lines):
            yield _ev(ctx, "DEF-006", h)


# ---------------------------------------------------------------------------
# Metadata (manifest scope)


def _manifest_hit(ctx: FileContext, indicator: str, m: SetupManifest, fieldname: Optional[str], conf: Confidence) -> Hit:
    hit = _hit(ctx, indicator, m.line_start, m.line_end, conf)
    quoted = m.excerpts.get(fieldname, "") if fieldname else ""
    if quoted:
        return Hit(hit.indicator_id, hit.line_start, hit.line_end, " ".join(quoted.split())[:200], hit.confidence)
    return hit


def met_001(ctx: FileContext, m: SetupManifest) -> Iterator[Hit]:
    cfg = ctx.config
    th = cfg.thresholds
    for fieldname, value in (("author", m.author), ("author_email", m.author_email)):
        if not value:
            continue
        text = value.split("@", 1)[0] if fieldname == "author_email" else value
        if text.strip().lower() in cfg.placeholders:
            yield _manifest_hit(ctx, "MET-001", m, fieldname, STRONG)
        elif randomness_score(text, cfg.common_bigrams, th.randomness_min_letters) > th.randomness:
            yield _manifest_hit(ctx, "MET-001", m, fieldname, HEURISTIC)


def met_002(ctx: FileContext, m: SetupManifest) -> Iterator[Hit]:
    if m.name and combosquat_base(normalize_name(m.name), ctx.config.popular_packages):
        yield _manifest_hit(ctx, "MET-002", m, "name", STRONG)


def _module_candidates(dist: str, cfg) -> set[str]:
    mapped = cfg.dist_modules.get(dist)
    out = {dist.replace("-", "_"), dist.replace("-", ""), dist.split("-")[-1], dist.split("-")[0]}
    if dist.startswith("python-"):
        out.add(dist[len("python-"):].replace("-", "_"))
    if dist.startswith("py") and len(dist) > 4:
        out.add(dist[2:].replace("-", "_"))
    if mapped:
        out.add(mapped.lower())
    return out


def met_003(ctx: FileContext, m: SetupManifest) -> Iterator[Hit]:
    cfg = ctx.config
    if not m.dependencies:
        return
    if any(d in cfg.suspicious_dependencies for d in m.dependencies):
        yield _manifest_hit(ctx, "MET-003", m, "install_requires" if "install_requires" in m.excerpts else "setup_requires", STRONG)
        return
    imported = {i.lower() for i in ctx.package.imported}
    unused = [
        d for d in m.dependencies
        if d not in cfg.build_only_dependencies and not (_module_candidates(d, cfg) & imported)
    ]
    if unused:
        key = "install_requires" if "install_requires" in m.excerpts else "setup_requires"
        yield _manifest_hit(ctx, "MET-003", m, key, HEURISTIC)


def description_anomaly(desc: Optional[str], computed: bool, ctx: FileContext) -> bool:
    cfg = ctx.config
    th = cfg.thresholds
    if desc is None:
        return not computed
    text = desc.strip()
    if len(text) < th.description_min_chars:
        return True
    if randomness_score(text, cfg.common_bigrams, th.randomness_min_letters) > th.randomness:
        return True
    return duplicate_token_ratio(text) > th.duplicate_token_ratio


def met_004(ctx: FileContext, m: SetupManifest) -> Iterator[Hit]:
    if description_anomaly(m.description, "description" in m.computed_fields, ctx):
        yield _manifest_hit(ctx, "MET-004", m, "description", HEURISTIC)


def met_006(ctx: FileContext, m: SetupManifest) -> Iterator[Hit]:
    if not m.name:
        return
    cfg = ctx.config
    name = normalize_name(m.name)
    popular = cfg.popular_packages
    if name in popular:
        return
    near = closest_popular(name, popular, cfg.thresholds.typo_max_distance, cfg.thresholds.typo_min_popular_len)
    if near is not None or homoglyph_match(name, frozenset(popular)):
        yield _manifest_hit(ctx, "MET-006", m, "name", STRONG)


STATEMENT_RULES: dict[str, StatementRule] = {
    "EXS-001": exs_001, "EXS-002": exs_002, "EXS-003": exs_003,
    "EXM-001": exm_001, "EXM-002": exm_002, "EXM-003": exm_003, "EXM-004": exm_004,
    "EXM-005": exm_005, "EXM-006": exm_006, "EXM-007": exm_007, "EXM-008": exm_008,
    "EXF-001": exf_001, "EXF-002": exf_002, "EXF-003": exf_003, "EXF-004": exf_004, "EXF-005": exf_005,
    "SYS-001": sys_001, "SYS-002": sys_002, "SYS-003": sys_003, "SYS-004": sys_004, "SYS-005": sys_005,
    "SYS-006": sys_006, "SYS-007": sys_007, "SYS-008": sys_008, "SYS-009": sys_009,
    "NET-001": net_001, "NET-002": net_002, "NET-003": net_003, "NET-004": net_004, "NET-005": net_005,
    "NET-006": net_006, "NET-007": net_007, "NET-008": net_008, "NET-009": net_009, "NET-010": net_010,
    "DEF-001": def_001, "DEF-002": def_002, "DEF-003": def_003, "DEF-004": def_004, "DEF-005": def_005,
    "DEF-006": def_006_stderr,
}

MANIFEST_RULES = {
    "MET-001": met_001, "MET-002": met_002, "MET-003": met_003, "MET-004": met_004, "MET-006": met_006,
}
