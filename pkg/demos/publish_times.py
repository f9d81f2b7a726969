"""Publish time versus content size.

Re-runs the reference scenario once per content size with a single
request and reports how long the gateway takes from the first origin
fetch to publish completion. The relation is linear: a fixed request
round trip plus serialization of the content over the origin uplink.
"""

import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(HERE / "src"))

from icnsim.harness import publish_bench  # noqa: E402

SCENARIO = HERE / "scenarios" / "reference.json"


def main():
    sizes = [1, 2, 4, 8]
    rows = publish_bench(SCENARIO, sizes, None)
    print("%-12s %-12s %s" % ("size_mib", "size_bytes", "publish_ms"))
    for mib, (size, ms) in zip(sizes, rows):
        print("%-12s %-12d %.3f" % (mib, size, ms))
    slope = (rows[-1][1] - rows[0][1]) / (rows[-1][0] - rows[0][0])
    print("marginal cost: %.6f ms/byte (%.1f Mbit/s effective uplink)"
          % (slope, 8.0 / slope / 1000.0))


if __name__ == "__main__":
    main()
