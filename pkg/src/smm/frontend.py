"""Textual model language: parser, printer, and output rendering.

A model file declares classes, method bodies, an initial object network and
default strategy choices:

    class Buffer { attr data: Int = -1; }

    op Buffer.put(p: Int): Void {
      let d: Int = 0;
      loadparam d p;
      setattr data d;
      return void;
    }

    setup {
      b: Buffer passive;
      w: Worker active work prio 1 links [b];
    }

    config { runnables: rtc; scheduler: rr; dispatch: single; medium: reliable; }

Statements are keyword-led and semicolon-terminated; ``L3:`` labels name
jump targets (``goto L3``, ``ifnot c goto L3``), and labels compile away
into plain body indices. ``parse_model`` yields a validated ``ModelDef`` or
raises ``ModelError`` with located diagnostics; ``print_model`` renders the
canonical source for a ``ModelDef``, and parsing that text reproduces the
value exactly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from . import actions as A
from .errors import Diagnostic, ModelError
from .state import SimState
from .universe import (
    AttrDef, BOOL, BoolVal, ClassDef, ClassTable, ClassType, INT, IntVal,
    MethMap, MethodDef, NULL_OID, NullOid, OidVal, OpSig, RecordVal,
    SubclassRel, TypeRef, VOID, VOID_VAL, Value, VoidVal, super_chain,
    validate_model, value_fits,
)
from .variation import (
    Config, DISPATCHERS, MEDIA, RUNNABLES, SCHEDULERS, make_config,
)
from .vm import (
    Active, AllDone, Blocked, OKind, Passive, RunResult, Setup, SetupEntry,
    StepLimit, run_main,
)


@dataclass(frozen=True)
class ConfigSel:
    """Strategy names selected by a model's config block."""

    runnables: str = "rtc"
    scheduler: str = "rr"
    dispatch: str = "single"
    medium: str = "reliable"


@dataclass
class ModelDef:
    """A parsed and validated model: tables, setup and default strategies."""

    classes: ClassTable
    subclass_rel: SubclassRel
    meth_map: MethMap
    setup: Setup
    config: ConfigSel = ConfigSel()


@dataclass(frozen=True)
class TraceRecord:
    step: int
    oid: int
    tid: int
    pc: int
    action: str
    deltas: str | None = None


# --- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>->)
  | (?P<int>-?[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}()\[\]:;,.=])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str  # "int" | "ident" | "punct" | "arrow" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ModelError([Diagnostic(f"unexpected character {text[pos]!r}",
                                         line, col)])
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                toks.append(_Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    toks.append(_Token("eof", "", line, col))
    return toks


# --- parser ---------------------------------------------------------------------

_STMT_KEYWORDS = {
    "let", "loadparam", "loadattr", "set", "setattr", "add", "sub", "mul",
    "eq", "lt", "goto", "ifnot", "new", "call", "send", "return",
}

_CONFIG_KEYS = {
    "runnables": RUNNABLES, "scheduler": SCHEDULERS,
    "dispatch": DISPATCHERS, "medium": MEDIA,
}


class _ParseAbort(Exception):
    pass


@dataclass
class _OpFixup:
    """A call/send site whose operation name awaits global resolution."""

    body: list
    index: int
    op_name: str
    arity: int
    loc: _Token


@dataclass
class _RawOp:
    class_name: str
    op_name: str
    params: list[tuple[str, TypeRef]]
    return_type: TypeRef
    body: list
    loc: _Token
    action_locs: list[_Token] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self.classes: dict[str, ClassDef] = {}
        self.class_locs: dict[str, _Token] = {}
        self.scl: SubclassRel = {}
        self.raw_ops: list[_RawOp] = []
        self.fixups: list[_OpFixup] = []
        self.setup: list[SetupEntry] = []
        self.setup_locs: list[_Token] = []
        self.setup_active: list[tuple[int, str, _Token]] = []
        self.config = ConfigSel()

    # token plumbing

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, msg: str, tok: _Token | None = None):
        tok = tok or self.peek()
        self.diags.append(Diagnostic(msg, tok.line, tok.col))
        raise _ParseAbort

    def note(self, msg: str, tok: _Token):
        self.diags.append(Diagnostic(msg, tok.line, tok.col))

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            self.fail(f"expected {want!r}, found {tok.text or 'end of file'!r}")
        return self.next()

    def ident(self, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"expected {what}, found {tok.text or 'end of file'!r}")
        return self.next()

    # grammar

    def parse(self) -> ModelDef:
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind != "ident":
                self.fail("expected 'class', 'op', 'setup' or 'config'")
            if tok.text == "class":
                self.parse_class()
            elif tok.text == "op":
                self.parse_op()
            elif tok.text == "setup":
                self.parse_setup()
            elif tok.text == "config":
                self.parse_config()
            else:
                self.fail(f"expected 'class', 'op', 'setup' or 'config', "
                          f"found {tok.text!r}")
        return self.finish()

    def parse_type(self) -> TypeRef:
        tok = self.ident("a type name")
        if tok.text == "Int":
            return INT
        if tok.text == "Bool":
            return BOOL
        if tok.text == "Void":
            return VOID
        return ClassType(tok.text)

    def parse_literal(self) -> tuple[Value, _Token]:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return IntVal(int(tok.text)), tok
        if tok.kind == "ident" and tok.text in ("true", "false", "void", "null"):
            self.next()
            if tok.text == "true":
                return BoolVal(True), tok
            if tok.text == "false":
                return BoolVal(False), tok
            if tok.text == "void":
                return VOID_VAL, tok
            return NULL_OID, tok
        self.fail(f"expected a literal, found {tok.text or 'end of file'!r}")

    def parse_class(self):
        self.expect("ident", "class")
        name_tok = self.ident("a class name")
        name = name_tok.text
        if name in self.classes:
            self.note(f"duplicate class {name!r}", name_tok)
        supers: list[str] = []
        if self.peek().kind == "ident" and self.peek().text == "extends":
            self.next()
            supers.append(self.ident("a superclass name").text)
            while self.peek().text == ",":
                self.next()
                supers.append(self.ident("a superclass name").text)
        self.expect("punct", "{")
        attrs: list[AttrDef] = []
        while self.peek().text != "}":
            self.expect("ident", "attr")
            attr_tok = self.ident("an attribute name")
            self.expect("punct", ":")
            attr_type = self.parse_type()
            self.expect("punct", "=")
            init, init_tok = self.parse_literal()
            self.expect("punct", ";")
            if any(a.name == attr_tok.text for a in attrs):
                self.note(f"duplicate attribute {attr_tok.text!r}", attr_tok)
            if not value_fits(init, attr_type, {}):
                self.note(f"initial value does not fit type {attr_type}",
                          init_tok)
            attrs.append(AttrDef(attr_tok.text, attr_type, init))
        self.expect("punct", "}")
        self.classes[name] = ClassDef(name, tuple(attrs))
        self.class_locs[name] = name_tok
        if supers:
            self.scl[name] = tuple(supers)

    def parse_op(self):
        self.expect("ident", "op")
        cls_tok = self.ident("a class name")
        self.expect("punct", ".")
        op_tok = self.ident("an operation name")
        self.expect("punct", "(")
        params: list[tuple[str, TypeRef]] = []
        if self.peek().text != ")":
            while True:
                p_tok = self.ident("a parameter name")
                self.expect("punct", ":")
                p_type = self.parse_type()
                if any(n == p_tok.text for n, _ in params):
                    self.note(f"duplicate parameter {p_tok.text!r}", p_tok)
                params.append((p_tok.text, p_type))
                if self.peek().text != ",":
                    break
                self.next()
        self.expect("punct", ")")
        self.expect("punct", ":")
        ret = self.parse_type()
        raw = _RawOp(cls_tok.text, op_tok.text, params, ret, [], cls_tok)
        self.parse_body(raw)
        self.raw_ops.append(raw)

    def parse_body(self, raw: _RawOp):
        self.expect("punct", "{")
        labels: dict[str, int] = {}
        pending: list[tuple[int, str, _Token]] = []  # (index, label, loc)

        while self.peek().text != "}":
            tok = self.peek()
            if tok.kind == "eof":
                self.fail("unterminated method body")
            # Optional "NAME:" label prefix.
            if tok.kind == "ident" and tok.text not in _STMT_KEYWORDS and \
                    self.toks[self.pos + 1].text == ":":
                self.next()
                self.next()
                if tok.text in labels:
                    self.note(f"duplicate label {tok.text!r}", tok)
                labels[tok.text] = len(raw.body)
                continue
            self.parse_stmt(raw, pending)

        self.expect("punct", "}")
        for index, label, loc in pending:
            if label not in labels:
                self.note(f"unknown label {label!r}", loc)
                continue
            act = raw.body[index]
            raw.body[index] = replace(act, target=labels[label])
        for pc, act in enumerate(raw.body):
            if isinstance(act, (A.Jump, A.BranchIfFalse)) and \
                    not 0 <= act.target < len(raw.body):
                self.note(
                    f"jump target {act.target} outside the body "
                    f"(0..{len(raw.body) - 1})", raw.action_locs[pc])

    def parse_jump_target(self, pending, index: int) -> int:
        """A label reference or a raw body index; labels resolve later."""
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return int(tok.text)
        lbl = self.ident("a label or body index")
        pending.append((index, lbl.text, lbl))
        return -1

    def parse_arg_list(self) -> list[str]:
        self.expect("punct", "(")
        args: list[str] = []
        if self.peek().text != ")":
            while True:
                args.append(self.ident("an argument local").text)
                if self.peek().text != ",":
                    break
                self.next()
        self.expect("punct", ")")
        return args

    def parse_stmt(self, raw: _RawOp, pending):
        tok = self.ident("a statement keyword")
        kw = tok.text
        body = raw.body
        index = len(body)

        if kw == "let":
            name = self.ident("a local name").text
            self.expect("punct", ":")
            t = self.parse_type()
            self.expect("punct", "=")
            init, init_tok = self.parse_literal()
            if not value_fits(init, t, {}):
                self.note(f"initial value does not fit type {t}", init_tok)
            body.append(A.NewLocal(name, t, init))
        elif kw == "loadparam":
            local = self.ident("a local name").text
            param = self.ident("a parameter name").text
            if not any(n == param for n, _ in raw.params):
                self.note(f"unknown parameter {param!r}", tok)
            body.append(A.LocalFromParam(local, param))
        elif kw == "loadattr":
            local = self.ident("a local name").text
            attr = self.ident("an attribute name").text
            body.append(A.LocalFromAttr(local, attr))
        elif kw == "set":
            local = self.ident("a local name").text
            value, _ = self.parse_literal()
            body.append(A.LocalConst(local, value))
        elif kw == "setattr":
            attr = self.ident("an attribute name").text
            local = self.ident("a local name").text
            body.append(A.SetAttr(attr, local))
        elif kw in A.BIN_OPS:
            dst = self.ident("a destination local").text
            lhs = self.ident("a left operand local").text
            rhs = self.ident("a right operand local").text
            body.append(A.BinOp(kw, dst, lhs, rhs))
        elif kw == "goto":
            target = self.parse_jump_target(pending, index)
            body.append(A.Jump(target))
        elif kw == "ifnot":
            cond = self.ident("a condition local").text
            self.expect("ident", "goto")
            target = self.parse_jump_target(pending, index)
            body.append(A.BranchIfFalse(cond, target))
        elif kw == "new":
            dst = self.ident("a destination local").text
            cls = self.ident("a class name").text
            body.append(A.NewObject(dst, cls))
        elif kw == "call":
            target = self.ident("a target local").text
            self.expect("punct", ".")
            op_tok = self.ident("an operation name")
            args = self.parse_arg_list()
            self.expect("arrow")
            result = self.ident("a result local").text
            self.fixups.append(_OpFixup(body, index, op_tok.text, len(args),
                                        op_tok))
            body.append(A.Call(target, _UNRESOLVED, tuple(args), result))
        elif kw == "send":
            target = self.ident("a target local").text
            self.expect("punct", ".")
            op_tok = self.ident("an operation name")
            args = self.parse_arg_list()
            self.expect("ident", "prio")
            prio_tok = self.expect("int")
            self.fixups.append(_OpFixup(body, index, op_tok.text, len(args),
                                        op_tok))
            body.append(A.SendSignal(target, _UNRESOLVED, tuple(args),
                                     int(prio_tok.text)))
        elif kw == "return":
            nxt = self.peek()
            if nxt.kind == "ident" and nxt.text not in ("true", "false",
                                                        "void", "null"):
                self.next()
                body.append(A.ReturnLocal(nxt.text))
            else:
                value, _ = self.parse_literal()
                body.append(A.ReturnConst(value))
        else:
            self.fail(f"unknown statement {kw!r}", tok)

        self.expect("punct", ";")
        raw.action_locs.append(tok)

    def parse_setup(self):
        self.expect("ident", "setup")
        self.expect("punct", "{")
        while self.peek().text != "}":
            name_tok = self.ident("an object name")
            self.expect("punct", ":")
            cls = self.ident("a class name").text
            kind_tok = self.ident("'passive' or 'active'")
            kind: OKind
            if kind_tok.text == "passive":
                kind = Passive()
            elif kind_tok.text == "active":
                op_tok = self.ident("an operation name")
                self.expect("ident", "prio")
                prio_tok = self.expect("int")
                prio = int(prio_tok.text)
                if prio < 0:
                    self.note("priority must be non-negative", prio_tok)
                kind = Active(_UNRESOLVED, prio)
                self.setup_active.append((len(self.setup), op_tok.text, op_tok))
            else:
                self.fail("expected 'passive' or 'active'", kind_tok)
            links: list[str] = []
            if self.peek().text == "links":
                self.next()
                self.expect("punct", "[")
                if self.peek().text != "]":
                    while True:
                        links.append(self.ident("a linked object name").text)
                        if self.peek().text != ",":
                            break
                        self.next()
                self.expect("punct", "]")
            self.expect("punct", ";")
            if any(e.name == name_tok.text for e in self.setup):
                self.note(f"duplicate setup object {name_tok.text!r}", name_tok)
            self.setup.append(SetupEntry(name_tok.text, cls, kind, tuple(links)))
            self.setup_locs.append(name_tok)
        self.expect("punct", "}")

    def parse_config(self):
        self.expect("ident", "config")
        self.expect("punct", "{")
        values = {}
        while self.peek().text != "}":
            key_tok = self.ident("a config key")
            if key_tok.text not in _CONFIG_KEYS:
                self.fail(f"unknown config key {key_tok.text!r}; expected one "
                          f"of {sorted(_CONFIG_KEYS)}", key_tok)
            self.expect("punct", ":")
            val_tok = self.ident("a strategy name")
            if val_tok.text not in _CONFIG_KEYS[key_tok.text]:
                self.note(
                    f"unknown {key_tok.text} strategy {val_tok.text!r}; "
                    f"choose from {sorted(_CONFIG_KEYS[key_tok.text])}", val_tok)
            self.expect("punct", ";")
            values[key_tok.text] = val_tok.text
        self.expect("punct", "}")
        self.config = replace(self.config, **values)

    # resolution and validation

    def finish(self) -> ModelDef:
        sigs_by_name: dict[str, list[OpSig]] = {}
        for raw in self.raw_ops:
            sig = OpSig(raw.op_name, tuple(t for _, t in raw.params),
                        raw.return_type)
            sigs_by_name.setdefault(raw.op_name, []).append(sig)

        def resolve(name: str, arity: int, loc: _Token) -> OpSig | None:
            found = [sig for sig in sigs_by_name.get(name, [])
                     if len(sig.param_types) == arity]
            # The same signature may be implemented by several classes.
            found = sorted(set(found), key=str)
            if not found:
                self.note(f"no operation {name!r} taking {arity} argument(s) "
                          f"is declared", loc)
                return None
            if len(found) > 1:
                self.note(f"operation {name!r} with {arity} argument(s) is "
                          f"ambiguous", loc)
                return None
            return found[0]

        for fix in self.fixups:
            sig = resolve(fix.op_name, fix.arity, fix.loc)
            if sig is not None:
                fix.body[fix.index] = replace(fix.body[fix.index], op=sig)

        meth_map: MethMap = {}
        for raw in self.raw_ops:
            if raw.class_name not in self.classes:
                self.note(f"operation for unknown class {raw.class_name!r}",
                          raw.loc)
                continue
            for t in [t for _, t in raw.params] + [raw.return_type]:
                if isinstance(t, ClassType) and t.name not in self.classes:
                    self.note(f"unknown class {t.name!r} in the signature of "
                              f"{raw.class_name}.{raw.op_name}", raw.loc)
            sig = OpSig(raw.op_name, tuple(t for _, t in raw.params),
                        raw.return_type)
            per_class = meth_map.setdefault(raw.class_name, {})
            if sig in per_class:
                self.note(f"duplicate method {raw.class_name}.{raw.op_name}",
                          raw.loc)
            if not raw.body:
                self.note(f"method {raw.class_name}.{raw.op_name} has an "
                          f"empty body", raw.loc)
                continue
            per_class[sig] = MethodDef(sig, tuple(raw.params), tuple(raw.body))

        self._check_attr_refs(meth_map)
        self._resolve_setup(meth_map)

        if not self.diags:
            # Safety net for invariants with no dedicated located check
            # above (e.g. inheritance cycles).
            for msg in validate_model(self.classes, self.scl, meth_map):
                self.diags.append(Diagnostic(msg, 1, 1))

        if self.diags:
            raise ModelError(self.diags)
        return ModelDef(self.classes, self.scl, meth_map, tuple(self.setup),
                        self.config)

    def _known_attrs(self, cls_name: str) -> set[str]:
        """Attribute names an instance executing this class's code may have:
        anything declared along the chain, on subclasses, or set up as a link."""
        names: set[str] = set()
        try:
            chain = set(super_chain(cls_name, self.scl))
        except ModelError:
            return set()
        for other in self.classes:
            try:
                other_chain = super_chain(other, self.scl)
            except ModelError:
                continue
            if other in chain or cls_name in other_chain:
                names.update(a.name for a in self.classes[other].attributes)
        for entry in self.setup:
            names.update(entry.links)
        return names

    def _check_attr_refs(self, meth_map: MethMap):
        for raw in self.raw_ops:
            if raw.class_name not in self.classes:
                continue
            known = self._known_attrs(raw.class_name)
            for pc, act in enumerate(raw.body):
                attr = None
                if isinstance(act, (A.LocalFromAttr, A.SetAttr)):
                    attr = act.attr
                if attr is not None and attr not in known:
                    self.note(f"unknown attribute {attr!r} for class "
                              f"{raw.class_name!r}", raw.action_locs[pc])

    def _resolve_setup(self, meth_map: MethMap):
        for pos, (index, op_name, loc) in enumerate(self.setup_active):
            entry = self.setup[index]
            if entry.class_name not in self.classes:
                self.note(f"setup object {entry.name!r} has unknown class "
                          f"{entry.class_name!r}", self.setup_locs[index])
                continue
            try:
                chain = super_chain(entry.class_name, self.scl)
            except ModelError:
                continue
            named = {sig for cls in chain for sig in meth_map.get(cls, {})
                     if sig.name == op_name}
            candidates = sorted((sig for sig in named if not sig.param_types),
                                key=str)
            if not candidates:
                if named:
                    self.note(f"start operation {op_name!r} must take no "
                              f"parameters", loc)
                else:
                    self.note(f"class {entry.class_name!r} does not implement "
                              f"{op_name!r}", loc)
                continue
            if len(candidates) > 1:
                self.note(f"start operation {op_name!r} is ambiguous for "
                          f"class {entry.class_name!r}", loc)
                continue
            self.setup[index] = replace(entry,
                                        kind=Active(candidates[0],
                                                    entry.kind.prio))
        for index, entry in enumerate(self.setup):
            if entry.class_name not in self.classes:
                self.note(f"setup object {entry.name!r} has unknown class "
                          f"{entry.class_name!r}", self.setup_locs[index])
            for link in entry.links:
                if not any(e.name == link for e in self.setup):
                    self.note(f"setup object {entry.name!r} links unknown "
                              f"object {link!r}", self.setup_locs[index])
            cls = self.classes.get(entry.class_name)
            if cls is not None:
                for attr in cls.attributes:
                    if attr.name in entry.links and \
                            not isinstance(attr.type, ClassType):
                        self.note(
                            f"link {attr.name!r} of {entry.name!r} would "
                            f"overwrite a non-reference attribute",
                            self.setup_locs[index])


# Placeholder signature for unresolved call/send sites; replaced during
# resolution and never present in a returned ModelDef.
_UNRESOLVED = OpSig("<unresolved>", (), VOID)


def parse_model(text: str) -> ModelDef:
    """Parse and validate model source; raise ModelError with located
    diagnostics on any syntax or consistency problem."""
    parser = _Parser(text)
    try:
        return parser.parse()
    except _ParseAbort:
        raise ModelError(parser.diags) from None


def load_model(path) -> ModelDef:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# --- printing -------------------------------------------------------------------

def _print_literal(v: Value) -> str:
    if isinstance(v, IntVal):
        return str(v.value)
    if isinstance(v, BoolVal):
        return "true" if v.value else "false"
    if isinstance(v, VoidVal):
        return "void"
    if isinstance(v, NullOid):
        return "null"
    raise ModelError(f"value {v!r} has no source form")


def _print_type(t: TypeRef) -> str:
    return str(t)


def render_action(act: A.Action, labels: dict[int, str] | None = None) -> str:
    """One action in source syntax; jump targets use ``labels`` when given."""

    def target(pc: int) -> str:
        return labels[pc] if labels and pc in labels else str(pc)

    if isinstance(act, A.NewLocal):
        return f"let {act.name}: {_print_type(act.type)} = {_print_literal(act.init)}"
    if isinstance(act, A.LocalFromParam):
        return f"loadparam {act.local} {act.param}"
    if isinstance(act, A.LocalFromAttr):
        return f"loadattr {act.local} {act.attr}"
    if isinstance(act, A.LocalConst):
        return f"set {act.local} {_print_literal(act.value)}"
    if isinstance(act, A.SetAttr):
        return f"setattr {act.attr} {act.local}"
    if isinstance(act, A.BinOp):
        return f"{act.op} {act.dst} {act.lhs} {act.rhs}"
    if isinstance(act, A.Jump):
        return f"goto {target(act.target)}"
    if isinstance(act, A.BranchIfFalse):
        return f"ifnot {act.cond} goto {target(act.target)}"
    if isinstance(act, A.NewObject):
        return f"new {act.dst} {act.class_name}"
    if isinstance(act, A.Call):
        return f"call {act.target}.{act.op.name}({', '.join(act.args)}) -> " \
               f"{act.result_local}"
    if isinstance(act, A.SendSignal):
        return f"send {act.target}.{act.op.name}({', '.join(act.args)}) " \
               f"prio {act.prio}"
    if isinstance(act, A.ReturnConst):
        return f"return {_print_literal(act.value)}"
    if isinstance(act, A.ReturnLocal):
        return f"return {act.name}"
    raise ModelError(f"action {act!r} has no source form")


def print_model(m: ModelDef) -> str:
    """Canonical source text for a model; parsing it reproduces ``m``."""
    out: list[str] = []
    for cls in m.classes.values():
        supers = m.subclass_rel.get(cls.name, ())
        ext = f" extends {', '.join(supers)}" if supers else ""
        out.append(f"class {cls.name}{ext} {{")
        for a in cls.attributes:
            out.append(f"  attr {a.name}: {_print_type(a.type)} = "
                       f"{_print_literal(a.init)};")
        out.append("}")
        out.append("")
    for cls_name, ops in m.meth_map.items():
        for sig, meth in ops.items():
            params = ", ".join(f"{n}: {_print_type(t)}" for n, t in meth.params)
            out.append(f"op {cls_name}.{sig.name}({params}): "
                       f"{_print_type(sig.return_type)} {{")
            targets = sorted({act.target for act in meth.body
                              if isinstance(act, (A.Jump, A.BranchIfFalse))})
            labels = {pc: f"L{pc}" for pc in targets}
            for pc, act in enumerate(meth.body):
                if pc in labels:
                    out.append(f"{labels[pc]}:")
                out.append(f"  {render_action(act, labels)};")
            out.append("}")
            out.append("")
    if m.setup:
        out.append("setup {")
        for entry in m.setup:
            if isinstance(entry.kind, Active):
                kind = f"active {entry.kind.op.name} prio {entry.kind.prio}"
            else:
                kind = "passive"
            links = f" links [{', '.join(entry.links)}]" if entry.links else ""
            out.append(f"  {entry.name}: {entry.class_name} {kind}{links};")
        out.append("}")
        out.append("")
    out.append("config {")
    out.append(f"  runnables: {m.config.runnables};")
    out.append(f"  scheduler: {m.config.scheduler};")
    out.append(f"  dispatch: {m.config.dispatch};")
    out.append(f"  medium: {m.config.medium};")
    out.append("}")
    return "\n".join(out) + "\n"


# --- rendering results ------------------------------------------------------------

def _render_value(v: Value) -> str:
    if isinstance(v, IntVal):
        return f"VInt {v.value}"
    if isinstance(v, BoolVal):
        return f"VBool {'true' if v.value else 'false'}"
    if isinstance(v, VoidVal):
        return "VVoid"
    if isinstance(v, OidVal):
        return f"XOID {v.oid}"
    if isinstance(v, NullOid):
        return "XNULL"
    if isinstance(v, RecordVal):
        inner = ",".join(f"({n!r},{_render_value(x)})" for n, x in v.fields)
        return f"[{inner}]"
    return repr(v)


def _value_json(v: Value):
    if isinstance(v, IntVal):
        return {"kind": "int", "value": v.value}
    if isinstance(v, BoolVal):
        return {"kind": "bool", "value": v.value}
    if isinstance(v, VoidVal):
        return {"kind": "void"}
    if isinstance(v, OidVal):
        return {"kind": "oid", "value": v.oid}
    if isinstance(v, NullOid):
        return {"kind": "null"}
    if isinstance(v, RecordVal):
        return {"kind": "record",
                "fields": [[n, _value_json(x)] for n, x in v.fields]}
    raise ModelError(f"value {v!r} has no output form")


def _halt_name(result: RunResult) -> str:
    if isinstance(result.halt, AllDone):
        return "all-done"
    if isinstance(result.halt, Blocked):
        return "blocked"
    if isinstance(result.halt, StepLimit):
        return "step-limit"
    return "unknown"


def render_final_state(result: RunResult, fmt: str = "text") -> str:
    """The final data store and step count, in console or structured form.

    The text form lists one line per object in ascending id:
    ``Class(id N): [("attr",VInt 1),...]`` followed by ``time: T``. The
    structured form is JSON carrying the same data plus the halt reason,
    with stable ordering for byte-for-byte comparison of runs.
    """
    s: SimState = result.final
    if fmt == "text":
        lines = ["attributes:"]
        for oid in sorted(s.ds):
            obj = s.ds[oid]
            attrs = ",".join(f'("{n}",{_render_value(v)})'
                             for n, v in obj.attrs.fields)
            lines.append(f"{obj.class_name}(id {oid}): [{attrs}]")
        lines.append(f"time: {result.time}")
        return "\n".join(lines)
    if fmt == "structured":
        doc = {
            "objects": [
                {"id": oid,
                 "class": s.ds[oid].class_name,
                 "attrs": [[n, _value_json(v)]
                           for n, v in s.ds[oid].attrs.fields]}
                for oid in sorted(s.ds)
            ],
            "time": result.time,
            "halt": _halt_name(result),
            "waiting": [list(w) for w in result.halt.waiting]
            if isinstance(result.halt, Blocked) else [],
        }
        return json.dumps(doc, indent=2)
    raise ModelError(f"unknown output format {fmt!r}")


def trace_recorder(records: list[TraceRecord]):
    """A step hook that appends one TraceRecord per executed step."""

    def hook(t: int, oid: int, tid: int, pc: int, action: A.Action):
        records.append(TraceRecord(t, oid, tid, pc, render_action(action)))

    return hook


def render_trace(records: list[TraceRecord]) -> str:
    lines = [f"[{r.step:>5}] obj={r.oid} tid={r.tid} pc={r.pc} {r.action}"
             for r in records]
    return "\n".join(lines)


# --- running models ------------------------------------------------------------

def build_config(m: ModelDef, *, runnables: str | None = None,
                 scheduler: str | None = None, dispatch: str | None = None,
                 medium: str | None = None) -> Config:
    """The model's strategy choices, with any explicit overrides applied."""
    sel = m.config
    return make_config(
        m.classes, m.subclass_rel, m.meth_map,
        runnables=runnables or sel.runnables,
        scheduler=scheduler or sel.scheduler,
        dispatch=dispatch or sel.dispatch,
        medium=medium or sel.medium,
    )


def run_model(m: ModelDef, *, runnables: str | None = None,
              scheduler: str | None = None, dispatch: str | None = None,
              medium: str | None = None, max_steps: int | None = None,
              on_step=None) -> RunResult:
    cfg = build_config(m, runnables=runnables, scheduler=scheduler,
                       dispatch=dispatch, medium=medium)
    return run_main(cfg, m.setup, max_steps=max_steps, on_step=on_step)
