"""Side-by-side delivery times: integrated ICN/CDN versus plain CDN.

Runs the mini scenario twice over the same topology and seed, once in
each mode, and prints per-request delivery times. The ICN run starts
slow (the first request crosses the gateway to the origin) and then
drops to cache latency; the baseline pays the full origin round trip on
every request.
"""

import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(HERE / "src"))

from icnsim.harness import run_scenario  # noqa: E402

SCENARIO = HERE / "scenarios" / "mini.json"


def show(title, run):
    print(title)
    print("  %-4s %-10s %-12s %s" % ("id", "issue_ms", "delivery_ms", "served_by"))
    for r in sorted(run.records, key=lambda r: r.request_id):
        print("  %-4d %-10.1f %-12.3f %s"
              % (r.request_id, r.t_issue_ms, r.delivery_ms, r.served_by))
    fetches = run.origin_fetch_total()
    origin_tx = sum(h.counters.tx_bytes for h in run.hosts.values()
                    if h.role in ("cache", "streamer"))
    print("  origin fetches: %d, origin bytes out: %d" % (fetches, origin_tx))
    print()


def main():
    sets = ["populations.0.request_count=10"]
    icn = run_scenario(SCENARIO, None, sets)
    cdn = run_scenario(SCENARIO, None, sets + ["mode=cdn-only"])
    show("integrated ICN/CDN (mode=icn)", icn)
    show("baseline (mode=cdn-only)", cdn)
    warm_icn = [r.delivery_ms for r in icn.records[-5:]]
    warm_cdn = [r.delivery_ms for r in cdn.records[-5:]]
    print("steady-state mean: icn %.3f ms vs cdn-only %.3f ms"
          % (sum(warm_icn) / len(warm_icn), sum(warm_cdn) / len(warm_cdn)))


if __name__ == "__main__":
    main()
