#!/usr/bin/env python3
"""Write the golden PCAPNG excerpt of a delay attack starting at 2 s.

The excerpt holds the steer-by-wire stream (UDP 1200) and the manual brake
stream (UDP 1201) as seen on switchFrontRight eth0 between 1.995 s and
2.012 s.  The phase label switches to ``delay_attack`` at 2 s; the first
delayed steer-by-wire frame arrives 10 us late at 2.003023 s and the next
one is marked BENIGN RECOVERED.

    python scripts/make_fig2_fixture.py [--out tests/fixtures/fig2_excerpt.pcapng]
"""
import argparse
from pathlib import Path

from nadskit.config import SCENARIO_DIR, expand_streams, load_scenario
from nadskit.dataset import labels as L
from nadskit.dataset.capture import CaptureSet, LabeledPacket
from nadskit.dataset.pcapng import write_point
from nadskit.sim.frames import FrameTemplate

ROOT = Path(__file__).resolve().parent.parent
IFACE = "switchFrontRight-eth0-in"
US = 1_000
DELAY = 10 * US
FIRST_DELAYED = 2_003_023 * US
SECOND_DELAYED = 2_009_023 * US


def templates():
    cfg = load_scenario(SCENARIO_DIR / "baseline.json")
    nodes = [n.name for n in cfg.topology.nodes]
    out = {}
    for i, rs in enumerate(expand_streams(cfg)):
        if rs.spec.udp_dst in (1200, 1201) and rs.spec.id.startswith("manual"):
            out[rs.spec.udp_dst] = FrameTemplate(rs.spec, i + 1, nodes.index(rs.source) + 1)
    return out


def build() -> CaptureSet:
    tmpl = templates()
    cap = CaptureSet()
    point = cap.add_point(IFACE, 1_000_000_000)
    recovered_due = False
    for k, ms in enumerate(range(1995, 2012)):
        base = ms * 1_000 * US
        phase = "delay_attack" if base >= 2_000_000 * US else ""
        steer_t = base + 13 * US
        label = L.BENIGN
        if steer_t + DELAY in (FIRST_DELAYED, SECOND_DELAYED):
            steer_t += DELAY
            label = L.DELAYED
        elif recovered_due:
            label = L.BENIGN_RECOVERED
        recovered_due = label == L.DELAYED
        brake_t = base + 15 * US
        pkts = [(steer_t, tmpl[1200].build(k), label), (brake_t, tmpl[1201].build(k), L.BENIGN)]
        for t, frame, lab in sorted(pkts, key=lambda p: p[0]):
            point.packets.append(LabeledPacket(t, frame, L.LabelPair(lab, phase)))
    return cap


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "tests" / "fixtures" / "fig2_excerpt.pcapng")
    args = ap.parse_args()
    cap = build()
    cap.check()
    write_point(cap.points[IFACE], args.out)
    print(f"wrote {len(cap)} packets to {args.out}")


if __name__ == "__main__":
    main()
