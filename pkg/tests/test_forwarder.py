import random

import pytest

from icnsim.forwarder import (DROP_INTEGRITY, DROP_LOOP, DROP_NO_ROUTE,
                              DROP_UNSOLICITED, Drop, DuplicateFace, Forwarder,
                              SendData, SendInterest, UnknownFace, UnknownPrefix)
from icnsim.ndn import Data, Interest, Name, make_data

V0 = Name.parse("/v/seg=0")
FRESH = 1_000_000


def node(cs=1 << 20, faces=(1, 2, 9)):
    f = Forwarder(cs)
    for face in faces:
        f.register_face(face)
    return f


def test_cs_hit_answers_without_pit():
    f = node()
    f.cs_insert(0.0, make_data(V0, b"p" * 10, FRESH, 0))
    acts = f.on_interest(1.0, 1, Interest(V0, nonce=1))
    assert len(acts) == 1 and isinstance(acts[0], SendData)
    assert acts[0].face == 1
    assert V0 not in f.pit
    assert f.counters.cs_hits == 1


def test_aggregation_same_name_new_face():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    first = f.on_interest(0.0, 1, Interest(V0, nonce=1))
    assert [type(a) for a in first] == [SendInterest]
    second = f.on_interest(0.5, 2, Interest(V0, nonce=2))
    assert second == []
    assert set(f.pit[V0].faces) == {1, 2}


def test_forwarding_decrements_hop_and_creates_pit():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    acts = f.on_interest(0.0, 1, Interest(Name.parse("/v/seg=3"), nonce=7, hop_limit=32))
    assert len(acts) == 1
    a = acts[0]
    assert isinstance(a, SendInterest) and a.face == 9
    assert a.interest.hop_limit == 31
    assert Name.parse("/v/seg=3") in f.pit


def test_duplicate_nonce_drops_as_loop():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    f.on_interest(0.0, 1, Interest(V0, nonce=5))
    acts = f.on_interest(0.1, 2, Interest(V0, nonce=5))
    assert acts == [Drop(DROP_LOOP)]
    assert f.counters.drops[DROP_LOOP] == 1


def test_hop_limit_zero_drops():
    f = node()
    acts = f.on_interest(0.0, 1, Interest(V0, nonce=1, hop_limit=0))
    assert acts == [Drop(DROP_LOOP)]


def test_hop_limit_one_cannot_be_forwarded_but_cs_still_answers():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    assert f.on_interest(0.0, 1, Interest(V0, nonce=1, hop_limit=1)) == [Drop(DROP_LOOP)]
    f.cs_insert(0.0, make_data(V0, b"x", FRESH, 0))
    acts = f.on_interest(1.0, 1, Interest(V0, nonce=2, hop_limit=1))
    assert isinstance(acts[0], SendData)


def test_no_route_drop():
    f = node()
    acts = f.on_interest(0.0, 1, Interest(Name.parse("/z"), nonce=1))
    assert acts == [Drop(DROP_NO_ROUTE)]
    assert Name.parse("/z") not in f.pit


def test_arrival_face_excluded_from_next_hops():
    f = node()
    f.fib_insert(Name.parse("/v"), [(1, 1), (2, 5)])
    acts = f.on_interest(0.0, 1, Interest(V0, nonce=1))
    assert isinstance(acts[0], SendInterest) and acts[0].face == 2
    # Only hop is the arrival face: no route.
    f2 = node()
    f2.fib_insert(Name.parse("/v"), [(1, 1)])
    assert f2.on_interest(0.0, 1, Interest(V0, nonce=1)) == [Drop(DROP_NO_ROUTE)]


def test_lowest_cost_then_lowest_face():
    f = node(faces=(1, 2, 3, 9))
    f.fib_insert(Name.parse("/v"), [(9, 3), (3, 2), (2, 2)])
    acts = f.on_interest(0.0, 1, Interest(V0, nonce=1))
    assert acts[0].face == 2


def test_data_fans_out_to_all_infaces_and_consumes_pit():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    f.on_interest(0.0, 1, Interest(V0, nonce=1))
    f.on_interest(0.1, 2, Interest(V0, nonce=2))
    d = make_data(V0, b"pay", FRESH, 0)
    acts = f.on_data(1.0, 9, d)
    assert [(a.face, a.data) for a in acts] == [(1, d), (2, d)]
    assert V0 not in f.pit
    assert f.cs.lookup(1.0, V0) is d


def test_unsolicited_data_dropped():
    f = node()
    acts = f.on_data(0.0, 9, make_data(V0, b"p", FRESH, 0))
    assert acts == [Drop(DROP_UNSOLICITED)]


def test_integrity_drop_leaves_state_unchanged():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    f.on_interest(0.0, 1, Interest(V0, nonce=1))
    bad = Data(V0, b"corrupted", b"\x11" * 32, FRESH, 0)
    acts = f.on_data(1.0, 9, bad)
    assert acts == [Drop(DROP_INTEGRITY)]
    assert V0 in f.pit
    assert len(f.cs) == 0


def test_same_face_duplicates_collapse_to_one_send():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    f.on_interest(0.0, 1, Interest(V0, nonce=1))
    f.on_interest(0.1, 1, Interest(V0, nonce=2))
    acts = f.on_data(1.0, 9, make_data(V0, b"p", FRESH, 0))
    assert len(acts) == 1 and acts[0].face == 1


def test_aggregation_bound_burst():
    # k simultaneous same-name interests: one upstream send, k data sends.
    for k in (2, 16, 64):
        f = Forwarder(1 << 20)
        upstream = 1000
        f.register_face(upstream)
        for i in range(k):
            f.register_face(i)
        f.fib_insert(Name.parse("/v"), [(upstream, 1)])
        sends = []
        for i in range(k):
            sends += f.on_interest(0.0, i, Interest(V0, nonce=i + 1))
        assert sum(isinstance(a, SendInterest) for a in sends) == 1
        acts = f.on_data(1.0, upstream, make_data(V0, b"p", FRESH, 0))
        assert sum(isinstance(a, SendData) for a in acts) == k


# -- content store -----------------------------------------------------------


def test_cs_lru_eviction():
    f = Forwarder(16384)
    a = make_data(Name.parse("/a/seg=0"), b"a" * 8192, FRESH, 0)
    b = make_data(Name.parse("/b/seg=0"), b"b" * 8192, FRESH, 0)
    c = make_data(Name.parse("/c/seg=0"), b"c" * 8192, FRESH, 0)
    f.cs_insert(0.0, a)
    f.cs_insert(1.0, b)
    f.cs.lookup(2.0, a.name)  # a is now most recently used
    evicted = f.cs_insert(3.0, c)
    assert evicted == [b.name]
    assert f.cs.bytes == 16384


def test_cs_reinsert_same_name_refreshes_without_double_count():
    f = Forwarder(16384)
    a = make_data(Name.parse("/a/seg=0"), b"a" * 8192, FRESH, 0)
    f.cs_insert(0.0, a)
    f.cs_insert(1.0, a)
    assert f.cs.bytes == 8192
    b = make_data(Name.parse("/b/seg=0"), b"b" * 8192, FRESH, 0)
    c = make_data(Name.parse("/c/seg=0"), b"c" * 8192, FRESH, 0)
    f.cs_insert(2.0, b)
    f.cs_insert(3.0, a)  # refresh recency: b becomes LRU
    assert f.cs_insert(4.0, c) == [b.name]


def test_cs_stale_evicted_before_fresh_lru():
    f = Forwarder(16384)
    stale = make_data(Name.parse("/stale/seg=0"), b"s" * 8192, 100, 0)
    fresh = make_data(Name.parse("/fresh/seg=0"), b"f" * 8192, FRESH, 0)
    f.cs_insert(0.0, stale)
    f.cs_insert(10.0, fresh)
    # Touch stale so plain LRU would evict fresh instead.
    assert f.cs.lookup(50.0, stale.name) is not None
    # Clock-stepped: at t=200 stale has expired.
    assert f.cs.lookup(200.0, fresh.name) is not None
    incoming = make_data(Name.parse("/new/seg=0"), b"n" * 8192, FRESH, 0)
    f2 = Forwarder(16384)
    f2.cs_insert(0.0, stale)
    f2.cs_insert(10.0, fresh)
    f2.cs.lookup(50.0, stale.name)
    evicted = f2.cs_insert(200.0, incoming)
    assert evicted == [stale.name]
    assert f2.cs.lookup(200.0, fresh.name) is not None


def test_cs_stale_never_returned_by_lookup():
    f = Forwarder(1 << 20)
    d = make_data(V0, b"p", 100, 0)
    f.cs_insert(0.0, d)
    assert f.cs.lookup(99.0, V0) is not None
    f2 = Forwarder(1 << 20)
    f2.cs_insert(0.0, d)
    assert f2.cs.lookup(100.0, V0) is None


def test_cs_payload_too_large_counted_not_raised():
    f = Forwarder(10)
    f.cs_insert(0.0, make_data(V0, b"x" * 11, FRESH, 0))
    assert len(f.cs) == 0
    assert f.counters.cs_rejections == 1


def test_cs_capacity_never_exceeded_random_ops():
    rng = random.Random(4)
    f = Forwarder(40_000)
    names = [Name.parse("/n%d/seg=0" % i) for i in range(30)]
    for step in range(600):
        n = rng.choice(names)
        if rng.random() < 0.7:
            size = rng.randrange(0, 12_000)
            f.cs_insert(float(step), make_data(n, b"z" * size, rng.choice((50, FRESH)), 0))
        else:
            f.cs.lookup(float(step), n)
        assert f.cs.bytes <= 40_000
        assert f.cs.bytes == sum(len(e.data.payload) for e in f.cs.entries.values())


# -- FIB ------------------------------------------------------------------------


def test_lpm_examples():
    f = node()
    f.fib_insert(Name.parse("/a"), [(1, 1)])
    f.fib_insert(Name.parse("/a/b"), [(2, 1)])
    assert f.fib_longest_prefix_match(Name.parse("/a/b/c")).prefix == Name.parse("/a/b")
    assert f.fib_longest_prefix_match(Name.parse("/a/x")).prefix == Name.parse("/a")
    assert f.fib_longest_prefix_match(Name.parse("/z")) is None


def test_root_prefix_is_default_route():
    f = node()
    f.fib_insert(Name.parse("/"), [(9, 1)])
    assert f.fib_longest_prefix_match(Name.parse("/anything")).prefix == Name.parse("/")


def brute_force_lpm(entries, name):
    best = None
    for prefix in entries:
        if prefix.is_prefix_of(name) and (best is None or len(prefix) > len(best)):
            best = prefix
    return best


def test_lpm_equals_brute_force_on_random_instances():
    rng = random.Random(2024)
    alphabet = [b"a", b"b", b"c", b"d"]
    for _ in range(1000):
        f = Forwarder(0)
        f.register_face(1)
        prefixes = set()
        for _ in range(rng.randrange(1, 10)):
            depth = rng.randrange(0, 5)
            prefixes.add(Name(tuple(rng.choice(alphabet) for _ in range(depth))))
        for p in prefixes:
            f.fib_insert(p, [(1, 1)])
        name = Name(tuple(rng.choice(alphabet) for _ in range(rng.randrange(0, 6))))
        got = f.fib_longest_prefix_match(name)
        want = brute_force_lpm(prefixes, name)
        assert (got.prefix if got else None) == want


# -- PIT expiry -------------------------------------------------------------------


def test_pit_expiry_boundary_closed():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    f.on_interest(0.0, 1, Interest(V0, nonce=1, lifetime_ms=4000))
    assert f.pit_expire(3999.0) == []
    assert V0 in f.pit
    assert f.pit_expire(4000.0) == [V0]
    assert f.counters.pit_timeouts == 1


def test_expiry_then_rearrival_forwards_again():
    f = node()
    f.fib_insert(Name.parse("/v"), [(9, 1)])
    f.on_interest(0.0, 1, Interest(V0, nonce=1, lifetime_ms=4000))
    f.pit_expire(4000.0)
    acts = f.on_interest(4500.0, 1, Interest(V0, nonce=2, lifetime_ms=4000))
    assert [type(a) for a in acts] == [SendInterest]


# -- configuration -----------------------------------------------------------------


def test_face_and_fib_config_errors():
    f = node()
    with pytest.raises(DuplicateFace):
        f.register_face(1)
    with pytest.raises(ValueError):
        f.fib_insert(Name.parse("/a"), [])
    with pytest.raises(UnknownPrefix):
        f.fib_remove(Name.parse("/a"))
    f.fib_insert(Name.parse("/a"), [(1, 0)])
    f.fib_remove(Name.parse("/a"))
    assert f.fib_longest_prefix_match(Name.parse("/a/b")) is None
    with pytest.raises(UnknownFace):
        f.on_interest(0.0, 404, Interest(V0, nonce=1))
    with pytest.raises(UnknownFace):
        f.on_data(0.0, 404, make_data(V0, b"p", FRESH, 0))


def test_replay_determinism():
    def run():
        f = node()
        f.fib_insert(Name.parse("/v"), [(9, 1)])
        log = []
        log += f.on_interest(0.0, 1, Interest(V0, nonce=1))
        log += f.on_interest(0.2, 2, Interest(V0, nonce=2))
        log += f.on_data(1.0, 9, make_data(V0, b"pp", FRESH, 0))
        log += f.on_interest(2.0, 2, Interest(V0, nonce=3))
        return log

    assert run() == run()
