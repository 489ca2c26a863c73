from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import replace

import pytest

from smm import (
    Active, AllDone, Blocked, CallerRef, CallPayload, EventKind,
    ExecError, Frame, IntVal, InternalError, Message, ModelError, OidVal,
    OpSig, Passive, RecordVal, SetupEntry, StepLimit, ThreadStatus, VOID,
    add_last_exec_info, alloc_object, build_initial_state, collect_runnables,
    consume_event, deliver_reliable, empty_state, exec_step, parse_model,
    push_frame, run, run_main, run_model,
)
from smm.state import ReturnPayload, make_event
from smm.variation import RtcRunnables

from conftest import GET_OP, PUT_OP, buffer_config

PRODCONS_SETUP = (
    SetupEntry("prod1", "Producer", Active(OpSig("produce", (), VOID), 10), ("b",)),
    SetupEntry("cons1", "Consumer", Active(OpSig("consume", (), VOID), 1), ("b",)),
    SetupEntry("cons2", "Consumer", Active(OpSig("consume", (), VOID), 1), ("b",)),
    SetupEntry("b", "Buffer", Passive(), ()),
)


class TestBuildInitialState:
    def test_fixture_setup_shape(self, prodcons_model):
        from smm.frontend import build_config
        cfg = build_config(prodcons_model)
        s = build_initial_state(cfg, prodcons_model.setup)
        assert sorted(s.ds) == [0, 1, 2, 3]
        assert s.ds[0].class_name == "Producer"
        assert s.ds[3].class_name == "Buffer"
        # Every active object got a link attribute to the buffer.
        for oid in (0, 1, 2):
            assert s.ds[oid].attrs.get("b") == OidVal(3)
        # The buffer is passive; the three active objects carry one ready
        # thread each, with the setup's priorities.
        assert s.cs[3] == {}
        prod_thread = s.cs[0][0]
        assert prod_thread.base_prio == 10
        assert prod_thread.status is ThreadStatus.READY
        assert prod_thread.top.pc == 0 and prod_thread.top.caller is None
        assert s.cs[1][1].base_prio == 1
        assert s.cs[2][2].base_prio == 1

    def test_empty_setup_runs_to_all_done(self):
        cfg = buffer_config()
        result = run_main(cfg, ())
        assert result.time == 0
        assert result.halt == AllDone()
        assert result.final.ds == {}

    def test_unknown_link_is_a_validation_error(self):
        cfg = buffer_config()
        setup = (SetupEntry("b", "Buffer", Passive(), ("ghost",)),)
        with pytest.raises(ModelError):
            build_initial_state(cfg, setup)

    def test_unknown_class_is_a_validation_error(self):
        cfg = buffer_config()
        setup = (SetupEntry("x", "Ghost", Passive(), ()),)
        with pytest.raises(ModelError):
            build_initial_state(cfg, setup)

    def test_link_colliding_with_scalar_attr_rejected(self):
        # A link attribute is named after its target entry; hitting a
        # declared non-reference attribute would corrupt the record.
        cfg = buffer_config()
        setup = (SetupEntry("x", "Buffer", Passive(), ("data",)),
                 SetupEntry("data", "Buffer", Passive(), ()))
        with pytest.raises(ModelError):
            build_initial_state(cfg, setup)

    def test_undispatchable_start_op_rejected_before_any_step(self):
        cfg = buffer_config()
        setup = (SetupEntry("b", "Buffer", Active(OpSig("ghost", (), VOID), 1),
                            ()),)
        with pytest.raises(ModelError):
            run_main(cfg, setup)


class TestCollectRunnables:
    def test_empty_state(self):
        cfg = buffer_config()
        assert collect_runnables(cfg.runnables_sel, empty_state()) == []

    def test_fixture_initial_state_under_rtc(self, prodcons_model):
        from smm.frontend import build_config
        cfg = build_config(prodcons_model, runnables="rtc")
        s = build_initial_state(cfg, prodcons_model.setup)
        rs = collect_runnables(cfg.runnables_sel, s)
        assert rs == [(0, 0, 10), (1, 1, 1), (2, 2, 1)]


class TestAddLastExecInfo:
    def test_recorded_time_is_attached(self):
        entries = add_last_exec_info({5: 7}, [(0, 5, 2)])
        assert entries[0].last_exec == 7

    def test_missing_ids_read_as_before_the_run(self):
        entries = add_last_exec_info({}, [(0, 5, 2)])
        assert entries[0].last_exec == -1

    def test_empty_list(self):
        assert add_last_exec_info({3: 1}, []) == []

    def test_order_preserved(self):
        entries = add_last_exec_info({1: 4}, [(0, 0, 1), (0, 1, 1), (1, 2, 3)])
        assert [(e.oid, e.tid, e.prio, e.last_exec) for e in entries] == [
            (0, 0, 1, -1), (0, 1, 1, 4), (1, 2, 3, -1)]


def _queued_call(s, buf_oid, *, value=10, sender=5, sender_tid=7, prio=3):
    msg = Message(sender, sender_tid, buf_oid,
                  CallPayload(PUT_OP, RecordVal((("0", IntVal(value)),)),
                              "result", prio))
    event = make_event(msg, s.next_seq)
    return replace(s, es=deliver_reliable(s.es, event), next_seq=s.next_seq + 1)


class TestConsumeEvent:
    def _buffer(self):
        from conftest import buffer_class
        s, oid = alloc_object(empty_state(), buffer_class())
        return s, oid

    def test_call_event_materializes_a_handler_thread(self):
        cfg = buffer_config(runnables="conc")
        s, buf = self._buffer()
        s = _queued_call(s, buf, sender=5, sender_tid=7)
        reserved = s.next_tid
        s2 = consume_event(s, cfg, buf, reserved)
        thr = s2.cs[buf][reserved]
        assert thr.status is ThreadStatus.READY
        assert thr.base_prio == 3
        frame = thr.top
        assert frame.op == PUT_OP and frame.pc == 0
        # Message arguments are bound to the dispatched method's parameters.
        assert frame.params.fields == (("p", IntVal(10)),)
        assert frame.caller == CallerRef(5, 7, "result")
        assert s2.es[buf] == ()
        assert s2.next_tid == reserved + 1

    def test_signal_event_has_no_caller(self):
        from smm.state import SignalPayload
        cfg = buffer_config(runnables="conc")
        s, buf = self._buffer()
        msg = Message(5, 7, buf,
                      SignalPayload(PUT_OP, RecordVal((("0", IntVal(1)),)), 2))
        s = replace(s, es=deliver_reliable(s.es, make_event(msg, 0)), next_seq=1)
        reserved = s.next_tid
        s2 = consume_event(s, cfg, buf, reserved)
        thr = s2.cs[buf][reserved]
        assert thr.top.caller is None
        assert thr.base_prio == 2

    def test_return_event_resumes_the_waiting_caller(self):
        cfg = buffer_config()
        s, buf = self._buffer()
        frame = Frame(self_oid=buf, op=GET_OP, params=RecordVal(),
                      locals=RecordVal(), pc=3, caller=None)
        s = push_frame(s, buf, 0, frame, base_prio=1)
        thr = s.cs[buf][0]
        s = replace(s, cs={buf: {0: replace(thr, status=ThreadStatus.WAITING)}},
                    next_tid=1)
        msg = Message(9, 0, buf, ReturnPayload(IntVal(-1), "v"))
        s = replace(s, es=deliver_reliable(s.es, make_event(msg, 0)), next_seq=1)
        s2 = consume_event(s, cfg, buf, 0)
        thr2 = s2.cs[buf][0]
        assert thr2.status is ThreadStatus.READY
        assert thr2.top.locals.get("v") == IntVal(-1)
        assert thr2.top.pc == 3
        assert s2.es[buf] == ()

    def test_ready_thread_is_left_alone(self):
        cfg = buffer_config()
        s, buf = self._buffer()
        frame = Frame(self_oid=buf, op=GET_OP, params=RecordVal(),
                      locals=RecordVal(), pc=0, caller=None)
        s = push_frame(s, buf, 0, frame)
        s = replace(s, next_tid=1)
        s = _queued_call(s, buf)
        assert consume_event(s, cfg, buf, 0) == s

    def test_bogus_pseudo_id_is_internal(self):
        cfg = buffer_config()
        s, buf = self._buffer()
        with pytest.raises(InternalError):
            consume_event(s, cfg, buf, s.next_tid)


class TestExecStep:
    def test_materialized_handler_interprets_its_first_action(self):
        cfg = buffer_config(runnables="conc")
        from conftest import buffer_class
        s, buf = alloc_object(empty_state(), buffer_class())
        s = _queued_call(s, buf, value=10)
        reserved = s.next_tid
        s2 = exec_step(buf, reserved, s, cfg)
        # One step: the event was consumed and put's first action ran.
        thr = s2.cs[buf][reserved]
        assert thr.top.pc == 1
        assert thr.top.locals.get("d") == IntVal(0)

    def test_fell_off_the_end_reported(self):
        from smm.actions import NewLocal
        from smm import INT, MethodDef, make_config
        from conftest import buffer_class
        sig = OpSig("stub", (), VOID)
        meth = MethodDef(sig, (), (NewLocal("d", INT, IntVal(0)),))
        classes = {"Buffer": buffer_class()}
        cfg = make_config(classes, {}, {"Buffer": {sig: meth}})
        s, buf = alloc_object(empty_state(), classes["Buffer"])
        frame = Frame(self_oid=buf, op=sig, params=RecordVal(),
                      locals=RecordVal(), pc=0, caller=None)
        s = push_frame(s, buf, 0, frame)
        s = replace(s, next_tid=1)
        s = exec_step(buf, 0, s, cfg)
        with pytest.raises(ExecError, match="fell off"):
            exec_step(buf, 0, s, cfg)


class TestRunLoop:
    def test_empty_state_returns_immediately(self):
        cfg = buffer_config()
        result = run({}, 0, cfg, empty_state())
        assert result.time == 0 and result.halt == AllDone()

    def test_fixture_race_under_conc_rr(self, prodcons_model):
        result = run_model(prodcons_model, runnables="conc", scheduler="rr")
        ds = result.final.ds
        assert ds[1].attrs.get("data") == IntVal(10)
        assert ds[2].attrs.get("data") == IntVal(10)
        assert ds[3].attrs.get("data") == IntVal(20)
        assert result.halt == AllDone()

    def test_deadlock_blocks_with_waiting_threads(self, deadlock_model):
        result = run_model(deadlock_model)
        assert result.halt == Blocked(((0, 0), (1, 1)))
        # Nothing ready was left behind: every surviving thread is stuck
        # in a call, and each object still buffers the unanswered call.
        for threads in result.final.cs.values():
            for thr in threads.values():
                assert thr.status is ThreadStatus.WAITING
        assert all(len(q) == 1 for q in result.final.es.values())

    def test_step_limit(self, prodcons_model):
        result = run_model(prodcons_model, max_steps=10)
        assert result.halt == StepLimit()
        assert result.time == 10

    def test_progress_drains_every_thread(self, prodcons_model):
        from smm import validate_state
        result = run_model(prodcons_model, runnables="conc", scheduler="rr")
        assert all(not threads for threads in result.final.cs.values())
        assert all(queue == () for queue in result.final.es.values())
        assert validate_state(result.final, prodcons_model.classes) == []

    def test_time_counts_exec_invocations(self, prodcons_model):
        steps = []
        result = run_model(prodcons_model, runnables="conc", scheduler="rr",
                           on_step=lambda *a: steps.append(a))
        assert result.time == len(steps)
        assert [t for t, *_ in steps] == list(range(result.time))

    def test_determinism_bit_identical(self, prodcons_model):
        a = run_model(prodcons_model, runnables="conc", scheduler="prio")
        b = run_model(prodcons_model, runnables="conc", scheduler="prio")
        assert a == b

    def test_every_intermediate_state_validates(self, prodcons_model):
        # Drive the scheduling loop by hand through the public pieces and
        # check the cross-store invariants after every single step; the
        # manual loop must also land on the same result as run().
        from smm import validate_state
        from smm.frontend import build_config
        cfg = build_config(prodcons_model, runnables="conc", scheduler="rr")
        s = build_initial_state(cfg, prodcons_model.setup)
        assert validate_state(s, prodcons_model.classes) == []
        times: dict[int, int] = {}
        t = 0
        while True:
            rs = collect_runnables(cfg.runnables_sel, s)
            if not rs:
                break
            entries = add_last_exec_info(times, rs)
            oid, tid = cfg.scheduler(t, entries)
            s = exec_step(oid, tid, s, cfg)
            problems = validate_state(s, prodcons_model.classes)
            assert problems == [], f"step {t}: {problems}"
            times[tid] = t
            t += 1
        reference = run_model(prodcons_model, runnables="conc", scheduler="rr")
        assert t == reference.time
        assert s == reference.final

    def test_object_ids_never_reused(self, prodcons_model):
        from conftest import buffer_class
        result = run_model(prodcons_model, runnables="conc", scheduler="rr")
        _, oid = alloc_object(result.final, buffer_class())
        assert oid == 4

    def test_handler_threads_record_their_creation_step(self, prodcons_model):
        # The first record of a materialized handler is its creation step;
        # from then on its entry is never "missing" for the schedulers.
        first_seen: dict[int, int] = {}
        order: list[tuple[int, int]] = []

        def hook(t, oid, tid, pc, action):
            first_seen.setdefault(tid, t)
            order.append((t, tid))

        run_model(prodcons_model, runnables="conc", scheduler="rr",
                  on_step=hook)
        handler_tids = [tid for tid in first_seen if tid > 2]
        assert handler_tids, "fixture run materialized no handlers"
        for tid in handler_tids:
            records = [t for t, x in order if x == tid]
            assert records[0] == first_seen[tid]


class TestRtcExclusion:
    @staticmethod
    def _buffer_windows(model, runnables):
        spans: dict[int, list[int]] = defaultdict(list)
        model_buf_oid = 3

        def hook(t, oid, tid, pc, action):
            if oid == model_buf_oid:
                spans[tid].append(t)

        run_model(model, runnables=runnables, scheduler="rr", on_step=hook)
        return [(min(ts), max(ts)) for ts in spans.values()]

    def test_rtc_buffer_activations_never_overlap(self, prodcons_model):
        windows = sorted(self._buffer_windows(prodcons_model, "rtc"))
        for (a_lo, a_hi), (b_lo, b_hi) in zip(windows, windows[1:]):
            assert a_hi < b_lo

    def test_conc_buffer_activations_do_overlap(self, prodcons_model):
        windows = sorted(self._buffer_windows(prodcons_model, "conc"))
        assert any(a_hi >= b_lo for (a_lo, a_hi), (b_lo, b_hi)
                   in zip(windows, windows[1:]))


class TestConservation:
    def test_calls_consumed_equal_returns_delivered(self, prodcons_model,
                                                    deadlock_model):
        from smm.frontend import build_config

        for model, runnables, scheduler in [
            (prodcons_model, "rtc", "rr"),
            (prodcons_model, "rtc", "prio"),
            (prodcons_model, "conc", "rr"),
            (prodcons_model, "conc", "prio"),
            (deadlock_model, "conc", "rr"),
        ]:
            delivered = Counter()

            def counting_medium(es, e, delivered=delivered):
                delivered[e.kind] += 1
                return deliver_reliable(es, e)

            cfg = replace(build_config(model, runnables=runnables,
                                       scheduler=scheduler),
                          medium=counting_medium)
            result = run_main(cfg, model.setup)
            assert result.halt == AllDone()
            pending = sum(len(q) for q in result.final.es.values())
            assert pending == 0
            # Every consumed call was answered: call handlers always carry a
            # caller reference and return to it exactly once.
            assert delivered[EventKind.CALL] == delivered[EventKind.RETURN]
            assert delivered[EventKind.CALL] > 0


class TestSignals:
    SOURCE = """
    class Target { attr hits: Int = 0; }
    class Sender { }

    op Target.ping(n: Int): Void {
      let d: Int = 0;
      loadparam d n;
      setattr hits d;
      return void;
    }

    op Sender.go(): Void {
      let t: Target = null;
      loadattr t tgt;
      let x: Int = 3;
      send t.ping(x) prio 2;
      return void;
    }

    setup {
      s: Sender active go prio 1 links [tgt];
      tgt: Target passive;
    }
    """

    def test_signal_is_handled_and_run_drains(self):
        model = parse_model(self.SOURCE)
        result = run_model(model)
        assert result.halt == AllDone()
        assert result.final.ds[1].attrs.get("hits") == IntVal(3)

    def test_sender_never_blocks_on_a_signal(self):
        model = parse_model(self.SOURCE)
        steps = []

        def hook(t, oid, tid, pc, action):
            steps.append((t, oid))

        run_model(model, on_step=hook)
        # The sender executes its full five-action body without a return
        # event ever existing, and the handler only starts after the send.
        sender_steps = [t for t, oid in steps if oid == 0]
        handler_steps = [t for t, oid in steps if oid == 1]
        assert len(sender_steps) == 5
        assert handler_steps and min(handler_steps) > sender_steps[3]
