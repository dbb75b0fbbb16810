import io
import math

import pytest
from hypothesis import given, strategies as st

from parbnp.interval import Box, Interval
from parbnp.model import builtin, parse
from parbnp.parallel import (
    BLACK,
    WHITE,
    BoxBatch,
    DeterministicScheduler,
    LoadReport,
    ParallelConfig,
    ProtocolError,
    SafetyViolation,
    Terminate,
    Token,
    WorkerCrashed,
    WorkerRuntime,
    balance_round,
    inverse_neighbors,
    neighbors,
    preprocess_plan,
    run_parallel,
    split_queue,
)
from parbnp.parallel.messages import WireError, decode, encode, from_dict, iter_records, read_trace, to_dict
from parbnp.parallel.topology import grid_shape, plan_height
from parbnp.search import SolveTimeout, paving_key, solve_sequential

CIRCLE = parse("var x in [-2,2]; var y in [-2,2]; eq: x^2 + y^2 = 1;")


# -- topology -------------------------------------------------------------------


def test_ring_neighbors():
    assert neighbors(3, 8, 2) == (2, 4)
    assert neighbors(0, 2, 2) == (1,)
    assert neighbors(0, 1, 2) == ()


def test_torus_neighbors_against_adjacency():
    assert set(neighbors(5, 16, 4)) == {1, 4, 6, 9}
    # independent oracle: wrap-around grid adjacency on a 4x4 board
    cells = {(r, c): 4 * r + c for r in range(4) for c in range(4)}
    for (r, c), i in cells.items():
        adj = {cells[((r + dr) % 4, (c + dc) % 4)] for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))}
        assert set(neighbors(i, 16, 4)) == adj


def test_grid_shape():
    assert grid_shape(16) == (4, 4)
    assert grid_shape(8) == (2, 4)
    assert grid_shape(7) == (1, 7)
    assert set(neighbors(3, 7, 4)) == {2, 4}


@given(p=st.integers(1, 64), size=st.sampled_from([2, 4]), data=st.data())
def test_neighbors_symmetric(p, size, data):
    i = data.draw(st.integers(0, p - 1))
    for j in neighbors(i, p, size):
        assert i in neighbors(j, p, size)
    assert inverse_neighbors(i, p, size) == neighbors(i, p, size)
    assert i not in neighbors(i, p, size)


def test_neighbors_range_check():
    with pytest.raises(ValueError):
        neighbors(8, 8, 2)
    with pytest.raises(ValueError):
        neighbors(0, 8, 3)


def test_preprocess_plan_examples():
    assert preprocess_plan(4) == ((0, 2, 0), (0, 1, 1), (2, 3, 1))
    assert preprocess_plan(1) == ()
    assert set(preprocess_plan(5)) == {(0, 3, 0), (0, 2, 1), (3, 4, 1), (0, 1, 2)}
    assert plan_height(preprocess_plan(5)) == 3


@given(p=st.integers(1, 300))
def test_preprocess_plan_tree(p):
    plan = preprocess_plan(p)
    receivers = [r for _, r, _ in plan]
    assert sorted(receivers) == list(range(1, p))
    assert plan_height(plan) == math.ceil(math.log2(p)) if p > 1 else plan == ()
    # a splitter owns a box before it splits: it is 0 or received at an earlier stage
    got = {0: -1}
    for s, r, stage in plan:
        assert got[s] < stage
        got[r] = stage


# -- preprocess split ------------------------------------------------------------------


def _boxes(vols):
    return [Box.of([(0, v)]) for v in vols]


def test_split_queue_examples():
    kept, sent = split_queue(_boxes([8, 6, 4, 2]))
    assert [b.volume() for b in sent] == [6, 2]
    assert [b.volume() for b in kept] == [8, 4]
    kept, sent = split_queue(_boxes(range(1, 33)))
    assert len(sent) == 16 and len(kept) == 16
    kept, sent = split_queue(_boxes([1, 2, 3, 4, 5]))
    assert len(sent) == 2


def test_split_queue_stable():
    q = [Box.of([(k, k + 1)]) for k in range(6)]
    kept, sent = split_queue(q)
    assert kept == q[0::2] and sent == q[1::2]


def test_preprocess_ships_half_at_threshold():
    p = builtin("sphere-plane")
    cfg = ParallelConfig(workers=2, nbb=32)
    w = WorkerRuntime(0, p, 0.05, cfg)
    out = w.work()
    while not out:
        out = w.work()
    ((dest, m),) = out
    assert dest == 1 and isinstance(m, BoxBatch)
    assert len(m.boxes) == 16 and w.load == 16


def test_preprocess_empty_marker():
    p = parse("var x in [1,2]; ineq: x >= 0;")
    cfg = ParallelConfig(workers=2)
    w0, w1 = WorkerRuntime(0, p, 0.1, cfg), WorkerRuntime(1, p, 0.1, cfg)
    msgs = []
    while not msgs:
        msgs = w0.work()
    ((dest, m),) = msgs
    assert dest == 1 and m.boxes == ()
    assert w1.awaiting_initial
    w1.receive(m)
    assert not w1.awaiting_initial


# -- balancing ---------------------------------------------------------------------------


def _balancer(load, loads, target="neighbors", delta=10):
    p = builtin("sphere-plane")
    cfg = ParallelConfig(workers=8, preprocess=False, delta=delta, balance_target=target)
    w = WorkerRuntime(3, p, 0.1, cfg)
    w.engine.queue.clear()
    w.engine.queue.extend(Box.of([(0, 1)] * 4, depth=k) for k in range(load))
    for j, l in zip(w.balancer.out, loads):
        w.balancer.loads[j] = l
    return w


def _shipped(out):
    return {dst: len(m.boxes) for dst, m in out if isinstance(m, BoxBatch)}


def test_balance_round_mean_rule():
    w = _balancer(20, [2, 4])
    out = balance_round(w)
    reports = [(d, m) for d, m in out if isinstance(m, LoadReport)]
    assert sorted(d for d, _ in reports) == [2, 4]
    assert all(m.load == 20 for _, m in reports)
    assert _shipped(out) == {2: 1}
    assert w.load == 19
    assert w.counter == 1 and w.color == BLACK


def test_balance_round_mean_above_margin():
    w = _balancer(200, [50, 60])
    assert _shipped(balance_round(w)) == {}


def test_balance_round_keeps_margin():
    w = _balancer(5, [0, 0])
    out = balance_round(w)
    assert _shipped(out) == {}
    assert len(out) == 2


def test_balance_round_no_reports_yet():
    w = _balancer(100, [])
    out = balance_round(w)
    assert _shipped(out) == {} and len(out) == 2


def test_balance_round_neighborhood_target():
    w = _balancer(100, [0, 0], target="neighborhood")
    assert _shipped(balance_round(w)) == {2: 34, 4: 34}
    assert w.load == 32


@given(
    load=st.integers(0, 300),
    loads=st.lists(st.integers(0, 80), min_size=0, max_size=2),
    delta=st.integers(0, 30),
    target=st.sampled_from(["neighbors", "neighborhood"]),
)
def test_balance_sanity(load, loads, delta, target):
    w = _balancer(load, loads, target, delta)
    before = dict(w.balancer.loads)
    out = balance_round(w)
    shipped = _shipped(out)
    assert sum(shipped.values()) + w.load == load
    if shipped:
        assert w.load >= delta
    if before:
        mu = sum(before.values()) / len(before)
        if target == "neighbors":
            cap = math.ceil(mu)
        else:
            cap = math.ceil((sum(before.values()) + load) / (len(before) + 1))
        for j, k in shipped.items():
            assert before[j] < cap
            assert before[j] + k <= cap


# -- receive -------------------------------------------------------------------------------


def _pair(p=CIRCLE, **kw):
    cfg = ParallelConfig(workers=2, preprocess=False, **kw)
    return WorkerRuntime(0, p, 0.1, cfg), WorkerRuntime(1, p, 0.1, cfg)


def test_receive_box_batch():
    _, w1 = _pair()
    assert w1.idle
    w1.reported_idle = True
    w1.receive(BoxBatch(0, tuple(Box.of([(0, 1), (0, 1)]) for _ in range(3))))
    assert not w1.idle and w1.load == 3
    assert w1.counter == -1 and w1.color == BLACK
    assert not w1.reported_idle


def test_receive_load_report():
    w0, _ = _pair()
    w0.receive(LoadReport(1, 7))
    assert w0.balancer.loads[1] == 7


def test_receive_protocol_faults():
    cfg = ParallelConfig(workers=8, preprocess=False)
    w = WorkerRuntime(3, CIRCLE, 0.1, cfg)
    with pytest.raises(ProtocolError):
        w.receive(BoxBatch(6, (CIRCLE.initial,)))
    with pytest.raises(ProtocolError):
        w.receive(LoadReport(6, 1))
    with pytest.raises(ProtocolError):
        w.receive(BoxBatch(2, ()))
    w.receive(Token(WHITE, 0))
    with pytest.raises(ProtocolError):
        w.receive(Token(WHITE, 0))


def test_config_validation():
    for kw in ({"workers": 0}, {"nbb": 1}, {"ns": 0}, {"delta": -1}, {"neighbors": 3}, {"balance_target": "x"}):
        with pytest.raises(ValueError):
            ParallelConfig(**kw)


# -- termination -----------------------------------------------------------------------------


def test_single_worker_terminates_when_empty():
    w = WorkerRuntime(0, CIRCLE, 0.2, ParallelConfig(workers=1))
    while not w.terminated:
        w.work()
    ref, _ = solve_sequential(CIRCLE, 0.2)
    assert paving_key(w.paving) == paving_key(ref)


def test_token_terminates_quiet_system():
    p = parse("var x in [1,2]; ineq: x >= 0;")
    w0, w1 = _pair(p)
    while w0.load:
        w0.work()
    w0.started = w1.started = True
    w0.reported_idle = w1.reported_idle = True
    ((dst, tok),) = w0.work()
    assert dst == 1 and tok == Token(WHITE, 0)
    w1.receive(tok)
    ((dst, tok),) = w1.work()
    assert dst == 0 and tok == Token(WHITE, 0)
    w0.receive(tok)
    assert w0.work() == [(1, Terminate())]
    assert w0.terminated


def _settle(ws, pending):
    """Deliver FIFO and let every worker act until all terminate."""
    while not all(w.terminated for w in ws):
        for w in ws:
            if w.ready():
                pending.extend(w.work())
        while pending:
            dst, m = pending.pop(0)
            if not ws[dst].terminated:
                ws[dst].receive(m)


def test_token_with_box_in_flight_recirculates():
    w0, w1 = _pair()
    w0.engine.queue.clear()
    w0.started = w1.started = True
    w0.reported_idle = w1.reported_idle = True
    in_flight = w0.ship(1, [CIRCLE.initial])
    ((_, tok),) = w0.work()
    w1.receive(tok)
    ((_, tok),) = w1.work()
    assert tok == Token(WHITE, 0)
    w0.receive(tok)
    # the batch has not arrived: the counts do not cancel, so a new round starts
    ((_, tok),) = w0.work()
    assert isinstance(tok, Token) and not w0.terminated
    w1.receive(in_flight)
    _settle([w0, w1], [(1, tok)])
    ref, _ = solve_sequential(CIRCLE, 0.1)
    assert paving_key(w0.paving + w1.paving) == paving_key(ref)
    assert not w0.paving and w1.paving
    assert w0.rounds >= 3


def _run_seeds(p, eps, cfg, seeds, **kw):
    ref = paving_key(solve_sequential(p, eps)[0])
    for seed in seeds:
        res = DeterministicScheduler(p, eps, cfg, seed=seed, **kw).run()
        assert paving_key(res.paving) == ref
        assert res.ledger_balanced()


@pytest.mark.parametrize("workers", [2, 3, 4])
@pytest.mark.parametrize("preprocess", [True, False])
def test_scheduler_random_interleavings(workers, preprocess):
    cfg = ParallelConfig(workers=workers, preprocess=preprocess, ns=3, delta=2, nbb=4)
    _run_seeds(CIRCLE, 0.25, cfg, range(5), delay=0.7)


def test_scheduler_lockstep_and_wire():
    cfg = ParallelConfig(workers=4, ns=5, neighbors=4)
    _run_seeds(CIRCLE, 0.2, cfg, [0], policy="lockstep", wire=True)


def test_scheduler_detects_premature_terminate(monkeypatch):
    from parbnp.parallel import worker as worker_mod

    def eager(self):
        if self.id == 0:
            self.terminated = True
            return [(j, Terminate()) for j in range(1, self.cfg.workers)]
        return []

    monkeypatch.setattr(worker_mod.WorkerRuntime, "_token_action", eager)
    cfg = ParallelConfig(workers=2, preprocess=True)
    with pytest.raises(SafetyViolation):
        DeterministicScheduler(CIRCLE, 0.1, cfg, seed=0).run()


def test_scheduler_script_and_trace():
    cfg = ParallelConfig(workers=2)
    buf = io.StringIO()
    sched = DeterministicScheduler(CIRCLE, 0.3, cfg, script=[("work", 1), ("work", 0), ("work", 0)], trace=buf)
    res = sched.run()
    assert sched.log[:3] == [("work", 1), ("work", 0), ("work", 0)]
    trace = read_trace(io.StringIO(buf.getvalue()))
    assert [t[0] for t in trace] == list(range(len(trace)))
    assert any(isinstance(m, Terminate) for *_, m in trace)
    assert res.ledger_balanced()


# -- wire format ------------------------------------------------------------------------------

floats = st.floats(allow_nan=False)


@st.composite
def messages(draw):
    kind = draw(st.sampled_from(["box", "load", "token", "term"]))
    if kind == "box":
        n = draw(st.integers(1, 5))
        boxes = []
        for _ in range(draw(st.integers(0, 4))):
            comps = []
            for _ in range(n):
                a, b = sorted((draw(floats), draw(floats)))
                comps.append(Interval(a, b))
            boxes.append(Box(tuple(comps), draw(st.integers(0, 2**32 - 1))))
        return BoxBatch(draw(st.integers(0, 0xFFFF)), tuple(boxes))
    if kind == "load":
        return LoadReport(draw(st.integers(0, 0xFFFF)), draw(st.integers(0, 2**32 - 1)))
    if kind == "token":
        return Token(draw(st.sampled_from([WHITE, BLACK])), draw(st.integers(-(2**63), 2**63 - 1)))
    return Terminate()


@given(ms=st.lists(messages(), max_size=5))
def test_wire_round_trip(ms):
    for m in ms:
        assert decode(encode(m)) == m
        assert from_dict(to_dict(m)) == m
    assert list(iter_records(b"".join(encode(m) for m in ms))) == ms


def test_wire_layout():
    assert encode(Terminate()) == b"\x01\x00\x00\x00\x04"
    assert encode(LoadReport(3, 7)) == b"\x07\x00\x00\x00\x02\x03\x00\x07\x00\x00\x00"
    data = encode(BoxBatch(1, (Box.of([(0.5, 1.0)], depth=2),)))
    assert data[4] == 1
    assert data[-16:] == b"\x00\x00\x00\x00\x00\x00\xe0?" + b"\x00\x00\x00\x00\x00\x00\xf0?"


def test_wire_errors():
    with pytest.raises(WireError):
        decode(b"\x01\x00")
    with pytest.raises(WireError):
        decode(b"\x01\x00\x00\x00\x09")
    with pytest.raises(WireError):
        list(iter_records(encode(Terminate())[:-1]))
    with pytest.raises(WireError):
        encode(BoxBatch(0, (Box.of([(0, 1)]), Box.of([(0, 1), (0, 1)]))))


# -- real processes ------------------------------------------------------------------------------


def test_run_parallel_single_worker_is_sequential():
    p = builtin("sphere-plane")
    ref, seq = solve_sequential(p, 0.2)
    res = run_parallel(p, 0.2, ParallelConfig(workers=1))
    assert paving_key(res.paving) == paving_key(ref)
    assert res.total.branches == seq.branches


def test_run_parallel_sphere_plane_equivalence():
    p = builtin("sphere-plane")
    eps = 0.05
    ref, _ = solve_sequential(p, eps)
    res = run_parallel(p, eps, ParallelConfig(workers=4, ns=100))
    assert paving_key(res.paving) == paving_key(ref)
    assert res.ledger_balanced()


@pytest.mark.slow
def test_run_parallel_sphere_plane_fine():
    p = builtin("sphere-plane")
    ref, _ = solve_sequential(p, 0.02)
    res = run_parallel(p, 0.02, ParallelConfig(workers=4, ns=100))
    assert paving_key(res.paving) == paving_key(ref)


def test_run_parallel_conservation_without_preprocess():
    p = builtin("3rpr-analog")
    eps = 0.2
    ref, seq = solve_sequential(p, eps)
    res = run_parallel(p, eps, ParallelConfig(workers=8, preprocess=False, ns=1000))
    assert res.total.branches == seq.branches
    assert paving_key(res.paving) == paving_key(ref)
    assert res.ledger_balanced()


def test_run_parallel_worker_crash(monkeypatch):
    from parbnp.parallel import worker as worker_mod

    def boom(*a, **k):
        raise RuntimeError("injected")

    monkeypatch.setattr(worker_mod, "step", boom)
    with pytest.raises(WorkerCrashed, match="injected"):
        run_parallel(CIRCLE, 0.1, ParallelConfig(workers=2))


def test_run_parallel_timeout():
    with pytest.raises(SolveTimeout):
        run_parallel(builtin("3rpr-analog"), 0.01, ParallelConfig(workers=2), time_budget=0.5)
