import random
from pathlib import Path

import pytest

from icnsim.forwarder import Forwarder
from icnsim.simnet import Host, Network

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
REFERENCE = SCENARIOS / "reference.json"
MINI = SCENARIOS / "mini.json"


@pytest.fixture
def rng():
    return random.Random(1234)


def build_chain(node_specs, links):
    """A small topology: node_specs is [(id, cs_capacity)], links is
    [(a, b, latency_ms, mbps)]. Returns (net, {id: host})."""
    net = Network()
    hosts = {}
    for nid, cs in node_specs:
        h = Host(net, nid, "host", fwd=Forwarder(cs))
        net.add_host(h)
        hosts[nid] = h
    for a, b, lat, bw in links:
        net.add_link(a, b, lat, bw)
    return net, hosts
