"""Deterministic desk-scale simulator for integrated ICN/CDN slices.

An NDN forwarding engine (content store, pending interest table,
name-prefix FIB), a CDN-to-ICN gateway that fetches content over an
emulated IP side and publishes it chunk by chunk, slice orchestration
with per-domain resource quotas, and a seeded discrete-event network
that reproduces the delivery-time, throughput, load and resource-usage
measurements of the integrated architecture.
"""

from .forwarder import (Counters, Drop, DuplicateFace, Forwarder, SendData,
                        SendInterest, UnknownFace, UnknownPrefix)
from .gateway import EmptyCandidates, Gateway, OriginRef, PendingFetch, select_gateway
from .harness import SimRun, build_and_run, publish_bench, run_scenario
from .ndn import (Data, Interest, MalformedPacket, MalformedUri, Name,
                  PacketCodecError, TruncatedPacket, UnknownType, chunk_content,
                  compute_digest, data_wire_len, decode_packet, encode_packet,
                  hash_stream, interest_wire_len, make_data)
from .orchestration import (DomainSpec, Flavor, Orchestrator, OrchestratorConfig,
                            QuotaExceeded, ScaleRequest, SliceSpec, UnknownSlice,
                            Vim, VnfSpec)
from .origin import (BadRange, CdnOrigin, ContentObject, DuplicateContent,
                     DuplicateVariant, ResolutionProfile, UnknownContent,
                     synthesize_payload)
from .scenario import Scenario, ScenarioError, load_scenario, validate_doc
from .simnet import (Host, HorizonExceeded, IpPopulation, Network, Population,
                     RequestRecord)

__version__ = "0.1.0"
