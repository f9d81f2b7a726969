"""Named-data primitives shared by every ICN-side component.

Hierarchical content names, the two NDN packet kinds (interest and data),
a fixed binary TLV wire codec, content chunking into segment packets, and
payload digests (SHA-256).

Wire format (big endian). Every TLV is ``type(1 byte) + length(4 bytes,
u32) + value``, nested TLVs included:

* Interest = 0x05 [ Name 0x07 [ Component 0x08 ... ], Nonce 0x0A (8),
  Lifetime 0x0C (4), HopLimit 0x22 (1) ]
* Data = 0x06 [ Name 0x07 [...], Payload 0x15, Digest 0x1D (32),
  Freshness 0x19 (4), FinalSegment 0x1A (4, optional) ]

Field order is fixed as listed; an absent FinalSegment is omitted
entirely. The encoded length of a packet is what the network layer
charges against link bandwidth.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass, replace

MAX_COMPONENTS = 32
MAX_COMPONENT_LEN = 255
U32_MAX = 0xFFFFFFFF
U64_MAX = 0xFFFFFFFFFFFFFFFF

DEFAULT_LIFETIME_MS = 4000
DEFAULT_HOP_LIMIT = 32
DEFAULT_CHUNK_SIZE = 8192
DIGEST_LEN = 32

TT_INTEREST = 0x05
TT_DATA = 0x06
TT_NAME = 0x07
TT_COMPONENT = 0x08
TT_NONCE = 0x0A
TT_LIFETIME = 0x0C
TT_HOP_LIMIT = 0x22
TT_PAYLOAD = 0x15
TT_DIGEST = 0x1D
TT_FRESHNESS = 0x19
TT_FINAL_SEGMENT = 0x1A

_KNOWN_TYPES = frozenset({
    TT_INTEREST, TT_DATA, TT_NAME, TT_COMPONENT, TT_NONCE, TT_LIFETIME,
    TT_HOP_LIMIT, TT_PAYLOAD, TT_DIGEST, TT_FRESHNESS, TT_FINAL_SEGMENT,
})

_SEG_PREFIX = b"seg="
_SEG_RE = re.compile(rb"\Aseg=(0|[1-9][0-9]*)\Z")
# Unreserved URI characters plus '=' so segment components render bare.
_SAFE = frozenset(
    b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-._~="
)
_HEXDIGITS = frozenset(b"0123456789abcdefABCDEF")


class MalformedUri(ValueError):
    """Name text or component set violates the naming rules."""


class PacketCodecError(ValueError):
    """Base class for wire decode failures."""


class TruncatedPacket(PacketCodecError):
    pass


class UnknownType(PacketCodecError):
    pass


class MalformedPacket(PacketCodecError):
    pass


def _decode_percent(raw: bytes) -> bytes:
    out = bytearray()
    i = 0
    n = len(raw)
    while i < n:
        b = raw[i]
        if b == 0x25:  # '%'
            if i + 2 >= n or raw[i + 1] not in _HEXDIGITS or raw[i + 2] not in _HEXDIGITS:
                raise MalformedUri("bad percent escape in %r" % raw)
            out.append(int(raw[i + 1 : i + 3], 16))
            i += 3
        else:
            out.append(b)
            i += 1
    return bytes(out)


def _encode_percent(comp: bytes) -> str:
    parts = []
    for b in comp:
        if b in _SAFE:
            parts.append(chr(b))
        else:
            parts.append("%%%02X" % b)
    return "".join(parts)


class Name:
    """Hierarchical content identifier; an immutable tuple of byte components.

    Canonical URI form is ``"/" + "/".join(components)`` with percent
    escapes for bytes outside the unreserved set; the root name renders
    as ``"/"``. Segment components must have the exact canonical form
    ``seg=<decimal u32>`` with no leading zeros.
    """

    __slots__ = ("components", "_hash")

    def __init__(self, components: tuple[bytes, ...] | list[bytes] = ()):
        comps = tuple(bytes(c) for c in components)
        if len(comps) > MAX_COMPONENTS:
            raise MalformedUri("more than %d components" % MAX_COMPONENTS)
        for c in comps:
            if not c:
                raise MalformedUri("empty component")
            if len(c) > MAX_COMPONENT_LEN:
                raise MalformedUri("component longer than %d bytes" % MAX_COMPONENT_LEN)
            if c.startswith(_SEG_PREFIX):
                m = _SEG_RE.match(c)
                if m is None or int(m.group(1)) > U32_MAX:
                    raise MalformedUri("non-canonical segment component %r" % c)
        self.components = comps
        self._hash = hash(comps)

    @classmethod
    def _unsafe(cls, comps: tuple[bytes, ...]) -> "Name":
        # Internal fast path for components already validated.
        n = object.__new__(cls)
        n.components = comps
        n._hash = hash(comps)
        return n

    @classmethod
    def parse(cls, uri: str) -> "Name":
        if not uri.startswith("/"):
            raise MalformedUri("name must start with '/': %r" % uri)
        if uri == "/":
            return cls(())
        body = uri[1:]
        comps = []
        for part in body.split("/"):
            if part == "":
                raise MalformedUri("empty component in %r" % uri)
            comps.append(_decode_percent(part.encode("utf-8")))
        return cls(tuple(comps))

    @property
    def uri(self) -> str:
        if not self.components:
            return "/"
        return "/" + "/".join(_encode_percent(c) for c in self.components)

    def is_prefix_of(self, other: "Name") -> bool:
        k = len(self.components)
        return self.components == other.components[:k]

    def child(self, component: bytes) -> "Name":
        return Name(self.components + (component,))

    def segment(self, n: int) -> "Name":
        """Return this name with a ``seg=<n>`` component appended."""
        if not 0 <= n <= U32_MAX:
            raise ValueError("segment number out of u32 range: %r" % n)
        if len(self.components) >= MAX_COMPONENTS:
            raise MalformedUri("cannot append segment to a full name")
        return Name._unsafe(self.components + (b"seg=%d" % n,))

    def seg_number(self) -> int | None:
        """Segment number of the last component, or None."""
        if not self.components:
            return None
        m = _SEG_RE.match(self.components[-1])
        return int(m.group(1)) if m else None

    def parent(self) -> "Name":
        return Name._unsafe(self.components[:-1])

    def __len__(self) -> int:
        return len(self.components)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Name) and self.components == other.components

    def __lt__(self, other: "Name") -> bool:
        return self.components < other.components

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return self.uri

    def __repr__(self) -> str:
        return "Name(%r)" % self.uri


@dataclass(slots=True)
class Interest:
    """Request packet naming the desired content."""

    name: Name
    nonce: int
    lifetime_ms: int = DEFAULT_LIFETIME_MS
    hop_limit: int = DEFAULT_HOP_LIMIT

    def __post_init__(self):
        if not 0 <= self.nonce <= U64_MAX:
            raise ValueError("nonce out of u64 range")
        if not 0 <= self.lifetime_ms <= U32_MAX:
            raise ValueError("lifetime out of u32 range")
        if not 0 <= self.hop_limit <= 0xFF:
            raise ValueError("hop limit out of u8 range")

    def decremented(self) -> "Interest":
        return replace(self, hop_limit=self.hop_limit - 1)


@dataclass(slots=True)
class Data:
    """Response packet carrying one named, digest-protected payload chunk."""

    name: Name
    payload: bytes
    digest: bytes
    freshness_ms: int = 0
    final_segment: int | None = None

    def __post_init__(self):
        if len(self.digest) != DIGEST_LEN:
            raise ValueError("digest must be %d bytes" % DIGEST_LEN)
        if not 0 <= self.freshness_ms <= U32_MAX:
            raise ValueError("freshness out of u32 range")
        if self.final_segment is not None and not 0 <= self.final_segment <= U32_MAX:
            raise ValueError("final segment out of u32 range")


def compute_digest(payload: bytes) -> bytes:
    """SHA-256 of the payload; the integrity check every node re-runs."""
    return hashlib.sha256(payload).digest()


def make_data(name: Name, payload: bytes, freshness_ms: int,
              final_segment: int | None = None) -> Data:
    return Data(name, payload, compute_digest(payload), freshness_ms, final_segment)


def chunk_content(base: Name, payload: bytes, chunk_size: int = DEFAULT_CHUNK_SIZE,
                  freshness_ms: int = 0) -> list[Data]:
    """Split a content object into segment data packets under ``base``.

    Produces ceil(len/chunk_size) segments; empty content still yields a
    single empty segment so last-segment signaling always exists. Every
    segment carries final_segment = count - 1.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    total = len(payload)
    count = max(1, -(-total // chunk_size))
    final = count - 1
    out = []
    for i in range(count):
        piece = payload[i * chunk_size : min((i + 1) * chunk_size, total)]
        out.append(make_data(base.segment(i), piece, freshness_ms, final))
    return out


def hash_stream(key: bytes, length: int) -> bytes:
    """Deterministic pseudo-random bytes derived from ``key``.

    Used for synthetic content payloads and transcoder outputs so that
    byte-level checks stay reproducible across runs and platforms.
    """
    if length < 0:
        raise ValueError("length must be >= 0")
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(key + counter.to_bytes(8, "big")).digest()
        counter += 1
    return bytes(out[:length])


def _name_inner_len(name: Name) -> int:
    return sum(5 + len(c) for c in name.components)


def interest_wire_len(i: Interest) -> int:
    """Encoded byte length of an interest, without building the bytes."""
    return 5 + (5 + _name_inner_len(i.name)) + 13 + 9 + 6


def data_wire_len(d: Data) -> int:
    """Encoded byte length of a data packet, without building the bytes."""
    n = 5 + (5 + _name_inner_len(d.name)) + (5 + len(d.payload)) + 37 + 9
    if d.final_segment is not None:
        n += 9
    return n


def _tlv(tt: int, value: bytes) -> bytes:
    return struct.pack(">BI", tt, len(value)) + value


def encode_packet(p: Interest | Data) -> bytes:
    if isinstance(p, Interest):
        name = b"".join(_tlv(TT_COMPONENT, c) for c in p.name.components)
        body = (
            _tlv(TT_NAME, name)
            + _tlv(TT_NONCE, p.nonce.to_bytes(8, "big"))
            + _tlv(TT_LIFETIME, p.lifetime_ms.to_bytes(4, "big"))
            + _tlv(TT_HOP_LIMIT, bytes((p.hop_limit,)))
        )
        return _tlv(TT_INTEREST, body)
    if isinstance(p, Data):
        name = b"".join(_tlv(TT_COMPONENT, c) for c in p.name.components)
        body = (
            _tlv(TT_NAME, name)
            + _tlv(TT_PAYLOAD, p.payload)
            + _tlv(TT_DIGEST, p.digest)
            + _tlv(TT_FRESHNESS, p.freshness_ms.to_bytes(4, "big"))
        )
        if p.final_segment is not None:
            body += _tlv(TT_FINAL_SEGMENT, p.final_segment.to_bytes(4, "big"))
        return _tlv(TT_DATA, body)
    raise TypeError("not a packet: %r" % (p,))


def _read_header(buf: memoryview, pos: int) -> tuple[int, int, int]:
    if pos + 5 > len(buf):
        raise TruncatedPacket("tlv header at %d overruns buffer" % pos)
    tt, ln = struct.unpack_from(">BI", buf, pos)
    if pos + 5 + ln > len(buf):
        raise TruncatedPacket("tlv value at %d overruns buffer" % pos)
    return tt, ln, pos + 5


def _expect(buf: memoryview, pos: int, want: int, fixed_len: int | None = None) -> tuple[bytes, int]:
    tt, ln, vpos = _read_header(buf, pos)
    if tt != want:
        if tt not in _KNOWN_TYPES:
            raise UnknownType("unknown tlv type 0x%02x" % tt)
        raise MalformedPacket("expected tlv 0x%02x, found 0x%02x" % (want, tt))
    if fixed_len is not None and ln != fixed_len:
        raise MalformedPacket("tlv 0x%02x must be %d bytes, got %d" % (want, fixed_len, ln))
    return bytes(buf[vpos : vpos + ln]), vpos + ln


def _decode_name(value: bytes) -> Name:
    buf = memoryview(value)
    comps = []
    pos = 0
    while pos < len(buf):
        comp, pos = _expect(buf, pos, TT_COMPONENT)
        comps.append(comp)
    try:
        return Name(tuple(comps))
    except MalformedUri as e:
        raise MalformedPacket("invalid name on the wire: %s" % e) from e


def decode_packet(b: bytes) -> Interest | Data:
    buf = memoryview(b)
    if len(buf) < 5:
        raise TruncatedPacket("packet shorter than one tlv header")
    tt, ln, vpos = _read_header(buf, 0)
    if tt not in (TT_INTEREST, TT_DATA):
        raise UnknownType("unknown outer tlv type 0x%02x" % tt)
    if vpos + ln != len(buf):
        raise MalformedPacket("trailing bytes after outer tlv")
    body = buf[vpos : vpos + ln]
    pos = 0
    name_v, pos = _expect(body, pos, TT_NAME)
    name = _decode_name(name_v)
    if tt == TT_INTEREST:
        nonce, pos = _expect(body, pos, TT_NONCE, 8)
        lifetime, pos = _expect(body, pos, TT_LIFETIME, 4)
        hop, pos = _expect(body, pos, TT_HOP_LIMIT, 1)
        if pos != len(body):
            raise MalformedPacket("trailing bytes inside interest")
        return Interest(name, int.from_bytes(nonce, "big"),
                        int.from_bytes(lifetime, "big"), hop[0])
    payload, pos = _expect(body, pos, TT_PAYLOAD)
    digest, pos = _expect(body, pos, TT_DIGEST, DIGEST_LEN)
    freshness, pos = _expect(body, pos, TT_FRESHNESS, 4)
    final = None
    if pos < len(body):
        final_v, pos = _expect(body, pos, TT_FINAL_SEGMENT, 4)
        final = int.from_bytes(final_v, "big")
    if pos != len(body):
        raise MalformedPacket("trailing bytes inside data")
    return Data(name, payload, digest, int.from_bytes(freshness, "big"), final)
