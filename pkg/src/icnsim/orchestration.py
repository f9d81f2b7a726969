"""Multi-domain orchestration: slice lifecycle, quotas, linking, scaling.

The orchestrator owns per-domain VIMs (quota accountants), creates and
destroys CDN/ICN slices atomically, links a CDN slice to an ICN slice by
selecting and configuring the NDN gateway, and applies a threshold
scale-out policy from VNF usage reports.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .gateway import EmptyCandidates, Gateway, OriginRef, select_gateway
from .ndn import Name
from .origin import CdnOrigin, ResolutionProfile
from .simnet import Host, Network

logger = logging.getLogger(__name__)

ICN_ROLES = ("ndn-node", "ndn-gateway")
CDN_ROLES = ("cache", "transcoder", "streamer")
VALID_ROLES = ICN_ROLES + CDN_ROLES


class QuotaExceeded(RuntimeError):
    def __init__(self, domain: str, message: str = ""):
        super().__init__(message or "quota exceeded in domain %r" % domain)
        self.domain = domain


class UnknownSlice(LookupError):
    pass


@dataclass(frozen=True, slots=True)
class Flavor:
    vcpus: int
    ram_mb: int
    disk_gb: int

    def __post_init__(self):
        if self.vcpus < 1 or self.ram_mb < 1 or self.disk_gb < 1:
            raise ValueError("flavor fields must all be >= 1")


@dataclass(slots=True)
class DomainSpec:
    name: str
    region: str
    quota: Flavor


@dataclass(slots=True)
class Allocation:
    id: int
    domain: str
    flavor: Flavor


class Vim:
    """Per-domain resource quota accountant."""

    def __init__(self, spec: DomainSpec):
        self.spec = spec
        q = spec.quota
        self.remaining = [q.vcpus, q.ram_mb, q.disk_gb]
        self.live: dict[int, Allocation] = {}
        self._next_id = 0

    def allocate(self, flavor: Flavor) -> Allocation:
        need = (flavor.vcpus, flavor.ram_mb, flavor.disk_gb)
        if any(r < n for r, n in zip(self.remaining, need)):
            raise QuotaExceeded(self.spec.name)
        for i, n in enumerate(need):
            self.remaining[i] -= n
        alloc = Allocation(self._next_id, self.spec.name, flavor)
        self._next_id += 1
        self.live[alloc.id] = alloc
        return alloc

    def release(self, alloc: Allocation):
        if alloc.id not in self.live:
            raise ValueError("allocation %d not live" % alloc.id)
        del self.live[alloc.id]
        f = alloc.flavor
        for i, n in enumerate((f.vcpus, f.ram_mb, f.disk_gb)):
            self.remaining[i] += n


@dataclass(slots=True)
class VnfSpec:
    role: str
    domain: str
    flavor: Flavor
    node: str
    cs_capacity_bytes: int | None = None


@dataclass(slots=True)
class SliceSpec:
    kind: str  # "CDN" | "ICN"
    duration_ms: float
    vnfs: list[VnfSpec]
    links: list[tuple[str, str, float, float]] = field(default_factory=list)


@dataclass(slots=True)
class VnfInstance:
    id: int
    role: str
    domain: str
    flavor: Flavor
    node: str
    allocation: Allocation
    host: Host


@dataclass(slots=True)
class UsageReport:
    instance_id: int
    node: str
    role: str
    cpu_busy_ms: float
    mem_bytes_peak: int


@dataclass(slots=True)
class ScaleRequest:
    slice_id: int
    instance_id: int
    role: str
    domain: str
    flavor: Flavor


@dataclass(slots=True)
class SliceState:
    id: int
    spec: SliceSpec
    created_at: float
    instances: list[VnfInstance]
    origin: CdnOrigin | None = None
    gateway_node: str | None = None
    linked_cdn: int | None = None
    scale_count: int = 0


@dataclass(slots=True)
class OrchestratorConfig:
    cs_capacity_bytes: int = 64 * 1024 * 1024
    chunk_size: int = 8192
    publish_freshness_ms: int = 3_600_000
    per_packet_cost_ms: float = 0.02
    origin_timeout_ms: float = 30_000.0
    transcode_rate_bps: float = 20e6
    scale_threshold: float = 0.8
    icn_as_ip: bool = False  # cdn-only baseline: ICN nodes become plain IP routers


class Orchestrator:
    """Creates slices on the shared network and accounts their resources."""

    def __init__(self, net: Network, domains: list[DomainSpec],
                 config: OrchestratorConfig | None = None):
        self.net = net
        self.config = config or OrchestratorConfig()
        self.vims = {d.name: Vim(d) for d in domains}
        self.slices: dict[int, SliceState] = {}
        self._next_slice = 0
        self.log: list[str] = []
        self._scale_marks: dict[int, tuple[float, float]] = {}  # instance -> (t, busy)

    # -- slice lifecycle ----------------------------------------------------

    def _validate_spec(self, spec: SliceSpec):
        if spec.kind not in ("CDN", "ICN"):
            raise ValueError("slice kind must be CDN or ICN")
        if not spec.vnfs:
            raise ValueError("slice needs at least one vnf")
        for v in spec.vnfs:
            if v.role not in VALID_ROLES:
                raise ValueError("unknown vnf role %r" % v.role)
            if v.domain not in self.vims:
                raise ValueError("unknown domain %r" % v.domain)
        roles = [v.role for v in spec.vnfs]
        if spec.kind == "CDN" and "cache" not in roles:
            raise ValueError("a CDN slice needs at least one cache")
        if spec.kind == "ICN" and "ndn-node" not in roles:
            raise ValueError("an ICN slice needs at least one ndn-node")
        nodes = [v.node for v in spec.vnfs]
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node ids inside slice")
        for n in nodes:
            if n in self.net.hosts:
                raise ValueError("node id %r already exists" % n)
        named = set(nodes)
        for a, b, _lat, _bw in spec.links:
            if a not in named or b not in named:
                raise ValueError("intra-slice link references unknown node")

    def create_slice(self, spec: SliceSpec, now: float = 0.0) -> int:
        """Allocate and instantiate a slice; all-or-nothing on quota."""
        self._validate_spec(spec)
        allocs: list[Allocation] = []
        try:
            for v in spec.vnfs:
                allocs.append(self.vims[v.domain].allocate(v.flavor))
        except QuotaExceeded:
            for v, a in zip(spec.vnfs, allocs):
                self.vims[v.domain].release(a)
            raise
        sid = self._next_slice
        self._next_slice += 1
        state = SliceState(sid, spec, now, [])
        if spec.kind == "CDN":
            state.origin = CdnOrigin(self.config.transcode_rate_bps)
        for v, alloc in zip(spec.vnfs, allocs):
            host = self._make_host(spec.kind, v, state)
            self.net.add_host(host)
            state.instances.append(VnfInstance(
                alloc.id, v.role, v.domain, v.flavor, v.node, alloc, host))
        for a, b, lat, bw in spec.links:
            self.net.add_link(a, b, lat, bw)
        self.slices[sid] = state
        return sid

    def _make_host(self, kind: str, v: VnfSpec, state: SliceState) -> Host:
        cfg = self.config
        if kind == "ICN" and not cfg.icn_as_ip:
            cs = v.cs_capacity_bytes if v.cs_capacity_bytes is not None else cfg.cs_capacity_bytes
            fwd = Gateway(cs, cfg.chunk_size, cfg.publish_freshness_ms)
            return Host(self.net, v.node, v.role, fwd=fwd, vcpus=v.flavor.vcpus,
                        per_packet_cost_ms=cfg.per_packet_cost_ms,
                        origin_timeout_ms=cfg.origin_timeout_ms)
        origin = state.origin if v.role in ("cache", "streamer") else None
        return Host(self.net, v.node, v.role, origin=origin, vcpus=v.flavor.vcpus,
                    per_packet_cost_ms=cfg.per_packet_cost_ms,
                    origin_timeout_ms=cfg.origin_timeout_ms)

    def _live(self, sid: int) -> SliceState:
        state = self.slices.get(sid)
        if state is None:
            raise UnknownSlice(sid)
        return state

    def destroy_slice(self, sid: int):
        state = self._live(sid)
        del self.slices[sid]
        for inst in state.instances:
            self.vims[inst.domain].release(inst.allocation)
            self.net.remove_host(inst.node)

    def expire_slices(self, now: float) -> list[int]:
        expired = [sid for sid, s in self.slices.items()
                   if s.created_at + s.spec.duration_ms <= now]
        for sid in expired:
            self.destroy_slice(sid)
        return expired

    # -- content plane helpers ------------------------------------------------

    def upload(self, sid: int, content_id: str, payload: bytes, source_resolution: str):
        state = self._live(sid)
        if state.origin is None:
            raise ValueError("slice %d has no content store" % sid)
        return state.origin.upload(content_id, payload, source_resolution)

    def transcode(self, sid: int, content_id: str, target: ResolutionProfile):
        state = self._live(sid)
        if state.origin is None:
            raise ValueError("slice %d has no content store" % sid)
        host = self._transcode_host(state)
        state.origin.on_cpu = host.charge_ms if host is not None else None
        obj = state.origin.transcode(content_id, target)
        self._refresh_linked_gateways(sid)
        return obj

    def _transcode_host(self, state: SliceState) -> Host | None:
        for inst in state.instances:
            if inst.role == "transcoder":
                return inst.host
        for inst in state.instances:
            if inst.role == "cache":
                return inst.host
        return None

    def serving_node(self, sid: int) -> str:
        """The node baseline requests and gateway fetches target."""
        state = self._live(sid)
        for role in ("streamer", "cache"):
            for inst in state.instances:
                if inst.role == role and inst.host.origin is not None:
                    return inst.node
        raise ValueError("slice %d has no serving node" % sid)

    # -- slice linking ----------------------------------------------------------

    def link_slices(self, cdn_sid: int, icn_sid: int, w: float,
                    demand: list[tuple[str, int]], prefix: Name) -> str:
        """Select the gateway, configure it, install routes toward it.

        ``demand`` pairs consumer attach nodes with request counts; the
        demand latency of a candidate is the count-weighted mean of its
        shortest-path latencies to those nodes.
        """
        cdn = self._live(cdn_sid)
        icn = self._live(icn_sid)
        if cdn.origin is None:
            raise ValueError("slice %d is not a CDN slice" % cdn_sid)
        serve = self.serving_node(cdn_sid)
        cands = [inst for inst in icn.instances if inst.host.fwd is not None]
        if not cands:
            raise EmptyCandidates("ICN slice %d has no NDN nodes" % icn_sid)
        total = sum(c for _n, c in demand)
        triples = []
        for inst in cands:
            to_cache = self.net.shortest_latency(inst.node, serve)
            if total > 0:
                to_demand = sum(
                    c * self.net.shortest_latency(inst.node, n) for n, c in demand
                ) / total
            else:
                to_demand = 0.0
            triples.append((inst.node, to_cache, to_demand))
        gw_node = select_gateway(triples, w)
        gw_host = self.net.hosts[gw_node]
        if not isinstance(gw_host.fwd, Gateway):
            raise ValueError("node %r cannot take the gateway role" % gw_node)
        prefix_map = {}
        for content_id, resolution in cdn.origin.catalog():
            base = Name(prefix.components + (content_id.encode(), resolution.encode()))
            prefix_map[base] = (content_id, resolution)
        gw_host.fwd.configure_origin(OriginRef(serve, prefix_map))
        icn.gateway_node = gw_node
        icn.linked_cdn = cdn_sid
        self._install_routes(prefix, gw_node)
        self.log.append("link: slice %d -> slice %d via gateway %s" % (cdn_sid, icn_sid, gw_node))
        return gw_node

    def _refresh_linked_gateways(self, cdn_sid: int):
        # New variants become servable without re-linking.
        for icn in self.slices.values():
            if icn.linked_cdn != cdn_sid or icn.gateway_node is None:
                continue
            gw_host = self.net.hosts.get(icn.gateway_node)
            if gw_host is None or not isinstance(gw_host.fwd, Gateway):
                continue
            ref = gw_host.fwd.origin_ref
            if ref is None or not gw_host.fwd.origin_ref.prefix_map:
                continue
            any_base = next(iter(ref.prefix_map))
            prefix = Name._unsafe(any_base.components[:-2])
            cdn = self.slices[cdn_sid]
            prefix_map = {}
            for content_id, resolution in cdn.origin.catalog():
                base = Name(prefix.components + (content_id.encode(), resolution.encode()))
                prefix_map[base] = (content_id, resolution)
            gw_host.fwd.configure_origin(OriginRef(ref.node, prefix_map))

    def _install_routes(self, prefix: Name, gw_node: str):
        """Route the content prefix toward the gateway on every NDN node."""
        for host in self.net.hosts.values():
            if host.fwd is None or host.id == gw_node or host.origin is not None:
                continue
            nh = self.net.next_hop(host.id, gw_node)
            if nh is None:
                continue
            face = host.face_by_peer.get(nh)
            if face is None:
                continue
            cost = int(round(self.net.shortest_latency(host.id, gw_node)))
            host.fwd.fib_insert(prefix, [(face, cost)])

    # -- reporting and scaling -----------------------------------------------------

    def vnf_report(self, inst: VnfInstance) -> UsageReport:
        return UsageReport(inst.id, inst.node, inst.role,
                           inst.host.busy_ms_total, inst.host.mem_peak)

    def scale_check(self, sid: int, now: float) -> ScaleRequest | None:
        """Report the first instance whose trailing-window cpu utilization
        exceeds the threshold."""
        state = self._live(sid)
        for inst in state.instances:
            last_t, last_busy = self._scale_marks.get(inst.id, (0.0, 0.0))
            span = now - last_t
            busy = inst.host.busy_ms_total
            self._scale_marks[inst.id] = (now, busy)
            if span <= 0:
                continue
            util = (busy - last_busy) / span
            if util > self.config.scale_threshold:
                return ScaleRequest(sid, inst.id, inst.role, inst.domain, inst.flavor)
        return None

    def handle_scale(self, req: ScaleRequest) -> VnfInstance | None:
        """Add one instance of the same role and flavor in the same domain."""
        state = self._live(req.slice_id)
        try:
            alloc = self.vims[req.domain].allocate(req.flavor)
        except QuotaExceeded:
            self.log.append("scale denied: quota exceeded in %s for slice %d"
                            % (req.domain, req.slice_id))
            logger.info("scale-out denied for slice %d in %s", req.slice_id, req.domain)
            return None
        original = next(i for i in state.instances if i.id == req.instance_id)
        state.scale_count += 1
        node = "%s-s%d" % (original.node, state.scale_count)
        spec = VnfSpec(req.role, req.domain, req.flavor, node)
        host = self._make_host(state.spec.kind, spec, state)
        self.net.add_host(host)
        inst = VnfInstance(alloc.id, req.role, req.domain, req.flavor, node, alloc, host)
        state.instances.append(inst)
        # Clone the original's adjacency, then advertise equal-cost next hops.
        for peer, lat in list(self.net._adj.get(original.node, [])):
            link = self.net._links[(original.node, peer)]
            self.net.add_link(node, peer, lat, link.mbps)
        if original.host.fwd is not None and host.fwd is not None:
            for e in original.host.fwd.fib_entries():
                hops = []
                for face, cost in e.next_hops:
                    peer = original.host.faces.get(face)
                    nf = host.face_by_peer.get(peer) if peer is not None else None
                    if nf is not None:
                        hops.append((nf, cost))
                if hops:
                    host.fwd.fib_insert(e.prefix, hops)
        for other in self.net.hosts.values():
            if other.fwd is None or other.id == node:
                continue
            to_new = other.face_by_peer.get(node)
            if to_new is None:
                continue
            for e in other.fwd.fib_entries():
                for face, cost in list(e.next_hops):
                    if other.faces.get(face) == original.node:
                        other.fwd.fib_add_next_hop(e.prefix, to_new, cost)
        self.log.append("scale out: slice %d added %s" % (req.slice_id, node))
        return inst

    # -- invariants -------------------------------------------------------------

    def quota_snapshot(self) -> dict[str, tuple[int, int, int]]:
        """remaining + live allocations per domain, for conservation checks."""
        out = {}
        for name, vim in self.vims.items():
            live = [0, 0, 0]
            for a in vim.live.values():
                live[0] += a.flavor.vcpus
                live[1] += a.flavor.ram_mb
                live[2] += a.flavor.disk_gb
            out[name] = tuple(r + l for r, l in zip(vim.remaining, live))
        return out
