"""Build and run a model straight from Python, no model file involved.

Shows the embedding surface: class/method tables built from dataclasses,
a Config assembled from strategy names, a custom medium swapped in with
dataclasses.replace (here: one that logs every delivery), and the step
hook that powers tracing.

Usage: python demos/embedding.py
"""

from dataclasses import replace

from smm import (
    Active, AttrDef, ClassDef, ClassType, INT, IntVal, MethodDef, NULL_OID,
    OpSig, Passive, SetupEntry, VOID, VOID_VAL, deliver_reliable, make_config,
    run_main,
)
from smm.actions import (
    Call, LocalFromAttr, LocalFromParam, NewLocal, ReturnConst, SetAttr,
)
from smm.frontend import render_action, render_final_state

STORE_OP = OpSig("store", (INT,), VOID)
MAIN_OP = OpSig("main", (), VOID)

CELL = ClassDef("Cell", (AttrDef("value", INT, IntVal(0)),))
DRIVER = ClassDef("Driver", ())

STORE = MethodDef(STORE_OP, (("v", INT),), (
    NewLocal("tmp", INT, IntVal(0)),
    LocalFromParam("tmp", "v"),
    SetAttr("value", "tmp"),
    ReturnConst(VOID_VAL),
))


def main() -> None:
    main_body = (
        NewLocal("cell", ClassType("Cell"), NULL_OID),
        LocalFromAttr("cell", "c"),
        NewLocal("x", INT, IntVal(99)),
        Call("cell", STORE_OP, ("x",), "ack"),
        ReturnConst(VOID_VAL),
    )
    main_meth = MethodDef(MAIN_OP, (), main_body)

    cfg = make_config(
        {"Cell": CELL, "Driver": DRIVER},
        {},
        {"Cell": {STORE_OP: STORE}, "Driver": {MAIN_OP: main_meth}},
        runnables="rtc", scheduler="rr",
    )

    deliveries = []

    def chatty_medium(es, event):
        deliveries.append(f"  deliver {event.kind.value} seq={event.seq} "
                          f"{event.msg.sender}->{event.msg.receiver}")
        return deliver_reliable(es, event)

    cfg = replace(cfg, medium=chatty_medium)

    setup = (
        SetupEntry("d", "Driver", Active(MAIN_OP, 1), ("c",)),
        SetupEntry("c", "Cell", Passive(), ()),
    )

    print("step trace:")
    result = run_main(cfg, setup, on_step=lambda t, oid, tid, pc, action:
                      print(f"  [{t:>2}] obj={oid} tid={tid} pc={pc} "
                            f"{render_action(action)}"))
    print("\nmedium log:")
    print("\n".join(deliveries))
    print("\nfinal state:")
    print(render_final_state(result))


if __name__ == "__main__":
    main()
