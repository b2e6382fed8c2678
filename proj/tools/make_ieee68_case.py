#!/usr/bin/env python3
"""Writes the reconstructed 68-bus, 16-machine case and its heatmap layout.

Network, loads, dispatch and inertia follow the widely circulated 68-bus
New England / New York benchmark data. Machine reactances, governors and
storage sizing are chosen here and documented in docs/case_format.md.
"""

import argparse
import math
from pathlib import Path

import networkx as nx

# from, to, r, x, b, tap (0 = none)
BRANCHES = [
    (1, 2, 0.0035, 0.0411, 0.6987, 0), (1, 30, 0.0008, 0.0074, 0.48, 0),
    (2, 3, 0.0013, 0.0151, 0.2572, 0), (2, 25, 0.0070, 0.0086, 0.146, 0),
    (2, 53, 0.0, 0.0181, 0.0, 1.025), (3, 4, 0.0013, 0.0213, 0.2214, 0),
    (3, 18, 0.0011, 0.0133, 0.2138, 0), (4, 5, 0.0008, 0.0128, 0.1342, 0),
    (4, 14, 0.0008, 0.0129, 0.1382, 0), (5, 6, 0.0002, 0.0026, 0.0434, 0),
    (5, 8, 0.0008, 0.0112, 0.1476, 0), (6, 7, 0.0006, 0.0092, 0.113, 0),
    (6, 11, 0.0007, 0.0082, 0.1389, 0), (6, 54, 0.0, 0.0250, 0.0, 1.07),
    (7, 8, 0.0004, 0.0046, 0.078, 0), (8, 9, 0.0023, 0.0363, 0.3804, 0),
    (9, 30, 0.0019, 0.0183, 0.29, 0), (10, 11, 0.0004, 0.0043, 0.0729, 0),
    (10, 13, 0.0004, 0.0043, 0.0729, 0), (10, 55, 0.0, 0.0200, 0.0, 1.07),
    (12, 11, 0.0016, 0.0435, 0.0, 1.06), (12, 13, 0.0016, 0.0435, 0.0, 1.06),
    (13, 14, 0.0009, 0.0101, 0.1723, 0), (14, 15, 0.0018, 0.0217, 0.366, 0),
    (15, 16, 0.0009, 0.0094, 0.171, 0), (16, 17, 0.0007, 0.0089, 0.1342, 0),
    (16, 19, 0.0016, 0.0195, 0.304, 0), (16, 21, 0.0008, 0.0135, 0.2548, 0),
    (16, 24, 0.0003, 0.0059, 0.068, 0), (17, 18, 0.0007, 0.0082, 0.1319, 0),
    (17, 27, 0.0013, 0.0173, 0.3216, 0), (19, 20, 0.0007, 0.0138, 0.0, 1.06),
    (19, 56, 0.0007, 0.0142, 0.0, 1.07), (20, 57, 0.0009, 0.0180, 0.0, 1.009),
    (21, 22, 0.0008, 0.0140, 0.2565, 0), (22, 23, 0.0006, 0.0096, 0.1846, 0),
    (22, 58, 0.0, 0.0143, 0.0, 1.025), (23, 24, 0.0022, 0.0350, 0.361, 0),
    (23, 59, 0.0005, 0.0272, 0.0, 0), (25, 26, 0.0032, 0.0323, 0.531, 0),
    (25, 60, 0.0006, 0.0232, 0.0, 1.025), (26, 27, 0.0014, 0.0147, 0.2396, 0),
    (26, 28, 0.0043, 0.0474, 0.7802, 0), (26, 29, 0.0057, 0.0625, 1.029, 0),
    (28, 29, 0.0014, 0.0151, 0.249, 0), (29, 61, 0.0008, 0.0156, 0.0, 1.025),
    (9, 36, 0.0022, 0.0196, 0.34, 0), (9, 36, 0.0022, 0.0196, 0.34, 0),
    (36, 37, 0.0005, 0.0045, 0.32, 0), (34, 36, 0.0033, 0.0111, 1.45, 0),
    (35, 34, 0.0001, 0.0074, 0.0, 0.946), (33, 34, 0.0011, 0.0157, 0.202, 0),
    (32, 33, 0.0008, 0.0099, 0.168, 0), (30, 31, 0.0013, 0.0187, 0.333, 0),
    (30, 32, 0.0024, 0.0288, 0.488, 0), (1, 31, 0.0016, 0.0163, 0.25, 0),
    (31, 38, 0.0011, 0.0147, 0.247, 0), (33, 38, 0.0036, 0.0444, 0.693, 0),
    (38, 46, 0.0022, 0.0284, 0.43, 0), (46, 49, 0.0018, 0.0274, 0.27, 0),
    (1, 47, 0.0013, 0.0188, 1.31, 0), (47, 48, 0.0025, 0.0268, 0.4, 0),
    (48, 40, 0.0020, 0.0220, 1.28, 0), (35, 45, 0.0007, 0.0175, 1.39, 0),
    (37, 43, 0.0005, 0.0276, 0.0, 0), (43, 44, 0.0001, 0.0011, 0.0, 0),
    (44, 45, 0.0025, 0.0730, 0.0, 0), (39, 44, 0.0, 0.0411, 0.0, 0),
    (39, 45, 0.0, 0.0839, 0.0, 0), (45, 51, 0.0004, 0.0105, 0.72, 0),
    (50, 52, 0.0012, 0.0288, 2.06, 0), (50, 51, 0.0009, 0.0221, 1.62, 0),
    (49, 52, 0.0076, 0.1141, 1.16, 0), (52, 42, 0.0040, 0.0600, 2.25, 0),
    (42, 41, 0.0040, 0.0600, 2.25, 0), (41, 40, 0.0060, 0.0840, 3.15, 0),
    (31, 62, 0.0, 0.0260, 0.0, 1.04), (32, 63, 0.0, 0.0130, 0.0, 1.04),
    (36, 64, 0.0, 0.0075, 0.0, 1.04), (37, 65, 0.0, 0.0033, 0.0, 1.04),
    (41, 66, 0.0, 0.0015, 0.0, 1.0), (42, 67, 0.0, 0.0015, 0.0, 1.0),
    (52, 68, 0.0, 0.0030, 0.0, 1.0), (1, 27, 0.0320, 0.3200, 0.41, 1.0),
]

# bus: (P, Q) in pu on 100 MVA
LOADS = {
    1: (2.527, 1.1856), 3: (3.22, 0.02), 4: (5.0, 1.84), 7: (2.34, 0.84),
    8: (5.22, 1.77), 9: (1.04, 1.25), 12: (0.09, 0.88), 15: (3.2, 1.53),
    16: (3.29, 0.32), 18: (1.58, 0.3), 20: (6.8, 1.03), 21: (2.74, 1.15),
    23: (2.48, 0.85), 24: (3.09, -0.92), 25: (2.24, 0.47), 26: (1.39, 0.17),
    27: (2.81, 0.76), 28: (2.06, 0.28), 29: (2.84, 0.27), 33: (1.12, 0.0),
    36: (1.02, -0.1946), 37: (60.0, 3.0), 39: (2.67, 0.126), 40: (0.6563, 0.2353),
    41: (10.0, 2.5), 42: (11.5, 2.5), 44: (2.6755, 0.0484), 45: (2.08, 0.21),
    46: (1.507, 0.285), 47: (2.0312, 0.3259), 48: (2.412, 0.022), 49: (1.64, 0.29),
    50: (1.0, -1.47), 51: (3.37, -1.22), 52: (24.7, 1.23),
}

# id, bus, P dispatch, V setpoint, H on 100 MVA
MACHINES = [
    (1, 53, 2.50, 1.045, 42.0), (2, 54, 5.45, 0.980, 30.2), (3, 55, 6.50, 0.983, 35.8),
    (4, 56, 6.32, 0.997, 28.6), (5, 57, 5.05, 1.011, 26.0), (6, 58, 7.00, 1.050, 34.8),
    (7, 59, 5.60, 1.063, 26.4), (8, 60, 5.40, 1.030, 24.3), (9, 61, 8.00, 1.025, 34.5),
    (10, 62, 5.00, 1.010, 31.0), (11, 63, 10.00, 1.000, 28.2), (12, 64, 13.50, 1.0156, 92.3),
    (13, 65, 35.91, 1.011, 248.0), (14, 66, 17.85, 1.000, 300.0), (15, 67, 10.00, 1.000, 300.0),
    (16, 68, 40.00, 1.000, 225.0),
]
SLACK_MACHINE = 13
EQUIVALENTS = {13, 14, 15, 16}


def fmt(x):
    return f"{x:.6g}"


def build(args):
    out = []
    total_load = sum(p for p, _ in LOADS.values())
    out.append("# Reconstructed 68-bus, 16-machine New England / New York system with")
    out.append("# grid-forming storage at every load bus. Generated by tools/make_ieee68_case.py.")
    opts = " ".join(f"--{k.replace('_', '-')}={v}" for k, v in sorted(vars(args).items()) if k not in ("out", "safety", "name"))
    out.append(f"# Parameters: {opts}" + (" --safety" if args.safety else ""))
    out.append("format_version = 1\n")
    out.append("[system]")
    out.append("name = ieee68")
    out.append("base_mva = 100")
    out.append("f_nominal = 60\n")
    out.append("[bus]")
    gen_bus = {m[1]: m for m in MACHINES}
    for b in range(1, 69):
        fields = [f"id={b}"]
        if b in gen_bus:
            m = gen_bus[b]
            fields.append("kind=slack" if m[0] == SLACK_MACHINE else "kind=pv")
            fields.append(f"v_set={fmt(m[3])}")
        else:
            fields.append("kind=pq")
        if b in LOADS:
            p, q = LOADS[b]
            fields.append(f"p_load={fmt(p)} q_load={fmt(q)}")
        out.append(" ".join(fields))
    out.append("\n[branch]")
    for k, (f, t, r, x, bc, tap) in enumerate(BRANCHES, start=1):
        line = f"id={k} from={f} to={t} r={fmt(r)} x={fmt(x)} b={fmt(bc)}"
        if tap:
            line += f" tap={fmt(tap)}"
        out.append(line)
    out.append("\n# Reactances and droop on each machine's rating S = max(H / h_ref, P / loading), converted to the system base.")
    out.append("[sg]")
    for mid, bus, p, _, h in MACHINES:
        h *= args.inertia_scale
        if mid in EQUIVALENTS:
            h *= args.equiv_inertia
        s = max(h / args.h_ref, p / args.loading)
        r_machine = args.r_equiv if mid in EQUIVALENTS else args.r_gen
        out.append(
            f"id={mid} bus={bus} M={fmt(2 * h)} D={fmt(args.damping * s)} xd={fmt(args.xd / s)} xq={fmt(args.xq / s)} "
            f"xdp={fmt(args.xdp / s)} tdo={fmt(args.tdo)} tch={fmt(args.tch)} rg={fmt(r_machine / s)} p_set={fmt(p)}"
        )
    if args.storage_fraction > 0:
        p_cap = args.storage_fraction * total_load / len(LOADS)
        out.append(f"\n# Storage: {args.storage_fraction:.0%} of total load, split evenly across the load buses.")
        out.append("[gfm]")
        for k, bus in enumerate(sorted(LOADS), start=1):
            out.append(
                f"id={k} bus={bus} tau={fmt(args.tau)} m_p={fmt(args.droop / p_cap)} m_q={fmt(args.m_q)} "
                f"x_c={fmt(args.x_c / p_cap)} p_cap={fmt(p_cap)} q_cap={fmt(p_cap)} "
                f"i_max={fmt(args.i_ratio * p_cap)} p_star=0 q_star=0"
                + (" safety=true" if args.safety else "")
            )
    return "\n".join(out) + "\n"


def layout():
    g = nx.Graph()
    g.add_nodes_from(range(1, 69))
    for f, t, _, x, _, _ in BRANCHES:
        g.add_edge(f, t, weight=1.0)
    pos = nx.kamada_kawai_layout(g)
    lines = ["bus,x,y"]
    for b in sorted(pos):
        x, y = pos[b]
        lines.append(f"{b},{x * 100:.2f},{y * 100:.2f}")
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--h-ref", type=float, default=4.0, help="inertia constant on machine rating (s)")
    ap.add_argument("--loading", type=float, default=0.4, help="dispatch over rating ceiling")
    ap.add_argument("--xd", type=float, default=1.0)
    ap.add_argument("--xq", type=float, default=0.9)
    ap.add_argument("--xdp", type=float, default=0.3)
    ap.add_argument("--inertia-scale", type=float, default=0.1, help="scale on every inertia constant")
    ap.add_argument("--equiv-inertia", type=float, default=0.25, help="scale on the area-equivalent inertias")
    ap.add_argument("--r-gen", type=float, default=0.05)
    ap.add_argument("--r-equiv", type=float, default=0.05)
    ap.add_argument("--tch", type=float, default=5.0)
    ap.add_argument("--tdo", type=float, default=8.0)
    ap.add_argument("--damping", type=float, default=1.0)
    ap.add_argument("--storage-fraction", type=float, default=0.15)
    ap.add_argument("--droop", type=float, default=0.01, help="m_p on each unit's rating")
    ap.add_argument("--m-q", type=float, default=0.0)
    ap.add_argument("--x-c", type=float, default=0.15)
    ap.add_argument("--i-ratio", type=float, default=1.1)
    ap.add_argument("--tau", type=float, default=0.02)
    ap.add_argument("--safety", action="store_true")
    ap.add_argument("--name", default="ieee68")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / f"{args.name}.case").write_text(build(args))
    (args.out / "ieee68_layout.csv").write_text(layout())


if __name__ == "__main__":
    main()
