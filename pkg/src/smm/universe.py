"""Structural universes: types, values, classes, operations, methods.

Model-level types and values are deeply embedded: an ``IntVal(2)`` is the
model's integer 2, not a host integer with extra meaning. Class identity is
by name; ``ClassType`` only wraps the name and stays valid exactly when the
name is a key of the model's class table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

from .errors import ModelError

if TYPE_CHECKING:
    from .actions import Action


# --- types -----------------------------------------------------------------

@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class BoolType:
    def __str__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class VoidType:
    def __str__(self) -> str:
        return "Void"


@dataclass(frozen=True)
class ClassType:
    name: str

    def __str__(self) -> str:
        return self.name


TypeRef = Union[IntType, BoolType, VoidType, ClassType]

INT = IntType()
BOOL = BoolType()
VOID = VoidType()


# --- values ----------------------------------------------------------------

@dataclass(frozen=True)
class IntVal:
    value: int


@dataclass(frozen=True)
class BoolVal:
    value: bool


@dataclass(frozen=True)
class VoidVal:
    pass


@dataclass(frozen=True)
class NullOid:
    """The null object reference: distinct from every allocated id."""


@dataclass(frozen=True)
class OidVal:
    oid: int


@dataclass(frozen=True)
class RecordVal:
    """Ordered record of named values; field order is declaration order."""

    fields: tuple[tuple[str, "Value"], ...] = ()

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.fields)

    def has(self, name: str) -> bool:
        return any(n == name for n, _ in self.fields)

    def get(self, name: str) -> "Value":
        for n, v in self.fields:
            if n == name:
                return v
        raise KeyError(name)

    def set(self, name: str, value: "Value") -> "RecordVal":
        """Replace an existing field, or append a new one at the end."""
        if self.has(name):
            return RecordVal(tuple(
                (n, value if n == name else v) for n, v in self.fields))
        return RecordVal(self.fields + ((name, value),))


Value = Union[IntVal, BoolVal, VoidVal, NullOid, OidVal, RecordVal]

VOID_VAL = VoidVal()
NULL_OID = NullOid()


# --- class/operation/method definitions ------------------------------------

@dataclass(frozen=True)
class AttrDef:
    name: str
    type: TypeRef
    init: Value


@dataclass(frozen=True)
class ClassDef:
    name: str
    attributes: tuple[AttrDef, ...] = ()


@dataclass(frozen=True)
class OpSig:
    """Operation signature; identity is the full (name, params, return)."""

    name: str
    param_types: tuple[TypeRef, ...]
    return_type: TypeRef

    def __str__(self) -> str:
        params = ", ".join(str(t) for t in self.param_types)
        return f"{self.name}({params}): {self.return_type}"


@dataclass(frozen=True)
class MethodDef:
    implements: OpSig
    params: tuple[tuple[str, TypeRef], ...]
    body: tuple["Action", ...]


# class name -> list of direct superclass names
SubclassRel = dict[str, tuple[str, ...]]
# class name -> (op sig -> implementing method)
MethMap = dict[str, dict[OpSig, MethodDef]]
ClassTable = dict[str, ClassDef]


# --- operations -------------------------------------------------------------

def default_value(t: TypeRef, class_table: ClassTable | None = None) -> Value:
    """The value a declaration of type ``t`` starts with.

    Class-typed slots start as the null reference; no object exists yet.
    """
    if isinstance(t, IntType):
        return IntVal(0)
    if isinstance(t, BoolType):
        return BoolVal(False)
    if isinstance(t, VoidType):
        return VOID_VAL
    if isinstance(t, ClassType):
        if class_table is not None and t.name not in class_table:
            raise ModelError(f"unknown class {t.name!r} in type")
        return NULL_OID
    raise ModelError(f"unknown type {t!r}")


def type_of_value(v: Value, ds) -> TypeRef:
    """Runtime type of a value; object references resolve via the data store.

    ``ds`` maps allocated ids to stored objects (see smm.state.DataStore).
    """
    from .errors import ExecError

    if isinstance(v, IntVal):
        return INT
    if isinstance(v, BoolVal):
        return BOOL
    if isinstance(v, VoidVal):
        return VOID
    if isinstance(v, OidVal):
        if v.oid not in ds:
            raise ExecError(f"dangling object reference {v.oid}")
        return ClassType(ds[v.oid].class_name)
    raise ExecError(f"value {v!r} has no nominal type")


def super_chain(cls: str, scl: SubclassRel) -> tuple[str, ...]:
    """Linearize a class and its superclasses for method lookup.

    Depth-first over declaration order, keeping the first occurrence of each
    class; single inheritance yields the plain chain. Cycles are a model
    defect and rejected.
    """
    out: list[str] = []
    seen: set[str] = set()

    def walk(c: str, path: tuple[str, ...]) -> None:
        if c in path:
            raise ModelError(f"inheritance cycle through class {c!r}")
        if c not in seen:
            seen.add(c)
            out.append(c)
        for sup in scl.get(c, ()):
            walk(sup, path + (c,))

    walk(cls, ())
    return tuple(out)


def value_fits(v: Value, t: TypeRef, scl: SubclassRel, ds=None) -> bool:
    """Assignment compatibility of a value against a declared type.

    A reference of a subclass fits a superclass-typed slot; null fits any
    class type. When ``ds`` is absent, any non-null reference is accepted
    for a class type (the store is needed to learn its class).
    """
    if isinstance(t, IntType):
        return isinstance(v, IntVal)
    if isinstance(t, BoolType):
        return isinstance(v, BoolVal)
    if isinstance(t, VoidType):
        return isinstance(v, VoidVal)
    if isinstance(t, ClassType):
        if isinstance(v, NullOid):
            return True
        if isinstance(v, OidVal):
            if ds is None or v.oid not in ds:
                return True
            return t.name in super_chain(ds[v.oid].class_name, scl)
        return False
    return False


def same_kind(a: Value, b: Value) -> bool:
    """Whether two values belong to the same storage kind.

    Null and non-null references count as one kind; used when no declared
    type is available (locals, link attributes).
    """
    ref = (OidVal, NullOid)
    if isinstance(a, ref) and isinstance(b, ref):
        return True
    return type(a) is type(b)


def validate_model(class_table: ClassTable, scl: SubclassRel,
                   meth_map: MethMap) -> list[str]:
    """Check the structural invariants of a model; return problem messages.

    A valid model has unique attribute names with type-correct initial
    values, an acyclic subclass relation over known classes, and method
    entries whose signatures, parameters and bodies are internally
    consistent (non-empty bodies, jump targets in range).
    """
    from . import actions

    problems: list[str] = []

    for cls in class_table.values():
        seen: set[str] = set()
        for attr in cls.attributes:
            if attr.name in seen:
                problems.append(
                    f"class {cls.name!r}: duplicate attribute {attr.name!r}")
            seen.add(attr.name)
            if isinstance(attr.type, ClassType) and attr.type.name not in class_table:
                problems.append(
                    f"class {cls.name!r}: attribute {attr.name!r} has unknown "
                    f"class type {attr.type.name!r}")
            elif not value_fits(attr.init, attr.type, scl):
                problems.append(
                    f"class {cls.name!r}: attribute {attr.name!r} initial value "
                    f"does not fit type {attr.type}")

    for name, supers in scl.items():
        if name not in class_table:
            problems.append(f"subclass relation names unknown class {name!r}")
        for sup in supers:
            if sup not in class_table:
                problems.append(
                    f"class {name!r} extends unknown class {sup!r}")
    for name in class_table:
        try:
            super_chain(name, scl)
        except ModelError as err:
            problems.append(str(err))

    for cls_name, ops in meth_map.items():
        if cls_name not in class_table:
            problems.append(f"method table names unknown class {cls_name!r}")
        for sig, meth in ops.items():
            where = f"method {cls_name}.{sig.name}"
            for t in sig.param_types + (sig.return_type,):
                if isinstance(t, ClassType) and t.name not in class_table:
                    problems.append(f"{where}: signature uses unknown class "
                                    f"{t.name!r}")
            if meth.implements != sig:
                problems.append(f"{where}: implements a different signature")
            if len(meth.params) != len(sig.param_types):
                problems.append(f"{where}: parameter count does not match signature")
            else:
                for (pname, ptype), want in zip(meth.params, sig.param_types):
                    if ptype != want:
                        problems.append(
                            f"{where}: parameter {pname!r} type {ptype} does "
                            f"not match signature type {want}")
            if not meth.body:
                problems.append(f"{where}: empty body")
            for pc, act in enumerate(meth.body):
                target = None
                if isinstance(act, actions.Jump):
                    target = act.target
                elif isinstance(act, actions.BranchIfFalse):
                    target = act.target
                if target is not None and not 0 <= target < len(meth.body):
                    problems.append(
                        f"{where}: action {pc} jumps to {target}, outside the "
                        f"body of {len(meth.body)} actions")
                if isinstance(act, actions.NewLocal):
                    if isinstance(act.type, ClassType) and act.type.name not in class_table:
                        problems.append(
                            f"{where}: action {pc} declares unknown class "
                            f"type {act.type.name!r}")
                    elif not value_fits(act.init, act.type, scl):
                        problems.append(
                            f"{where}: action {pc} initial value does not fit "
                            f"type {act.type}")
                if isinstance(act, actions.NewObject) and act.class_name not in class_table:
                    problems.append(
                        f"{where}: action {pc} creates unknown class "
                        f"{act.class_name!r}")
    return problems
