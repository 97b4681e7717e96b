"""Regenerate cases/ieee118.case.

The 118-bus transmission system grouped into 107 substations: buses coupled
through transformers share a substation (nine pairs plus the {68 69 116}
triple and the {86 87} generator step-up pair).  Substations are numbered by
ascending lowest bus id.

Coordinates are synthetic.  The 107 substations are laid out as eight
well-separated geographic clusters (ring layouts around a 4 x 2 grid of
centers), so a region distance of 45 km partitions them into exactly eight
regions no matter which border substation anchors the walk.

Four reinforcement ties augment the stock branch set (67-68, 48-69, 62-116,
28-30) so that substations 61 and 16 rank first and second in
inter-substation connectivity and therefore become the control centers.

Run from the repository root:  python scripts/build_case118.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gridmon.topology import (
    parse_power_case,
    partition_regions,
    place_pmus,
    select_control_centers,
    substation_connectivity,
)

# Stock branch list of the 118-bus system (186 entries, doubles kept).
STOCK_BRANCHES = """
1 2    1 3    4 5    3 5    5 6    6 7    8 9    8 5    9 10   4 11
5 11   11 12  2 12   3 12   7 12   11 13  12 14  13 15  14 15  12 16
15 17  16 17  17 18  18 19  19 20  15 19  20 21  21 22  22 23  23 24
23 25  26 25  25 27  27 28  28 29  30 17  8 30   26 30  17 31  29 31
23 32  31 32  27 32  15 33  19 34  35 36  35 37  33 37  34 36  34 37
38 37  37 39  37 40  30 38  39 40  40 41  40 42  41 42  43 44  34 43
44 45  45 46  46 47  46 48  47 49  42 49  42 49  45 49  48 49  49 50
49 51  51 52  52 53  53 54  49 54  49 54  54 55  54 56  55 56  56 57
50 57  56 58  51 58  54 59  56 59  56 59  55 59  59 60  59 61  60 61
60 62  61 62  63 59  63 64  64 61  38 65  64 65  49 66  49 66  62 66
62 67  65 66  66 67  65 68  47 69  49 69  68 69  69 70  24 70  70 71
24 72  71 72  71 73  70 74  70 75  69 75  74 75  76 77  69 77  75 77
77 78  78 79  77 80  77 80  79 80  68 81  81 80  77 82  82 83  83 84
83 85  84 85  85 86  86 87  85 88  85 89  88 89  89 90  89 90  90 91
89 92  89 92  91 92  92 93  92 94  93 94  94 95  80 96  82 96  94 96
80 97  80 98  80 99  92 100 94 100 95 96  96 97  98 100 99 100 100 101
92 102 101 102 100 103 100 104 103 104 103 105 100 106 104 105 105 106 105 107
105 108 106 107 108 109 103 110 109 110 110 111 110 112 17 113 32 113 32 114
27 115 114 115 68 116 12 117 75 118 76 118
"""

# Reinforcement ties (see module docstring).
EXTRA_BRANCHES = [(67, 68), (48, 69), (62, 116), (28, 30)]

# Transformer-coupled bus groups sharing a substation.
MERGED = [
    (5, 8), (17, 30), (25, 26), (37, 38), (59, 63),
    (61, 64), (65, 66), (68, 69, 116), (80, 81), (86, 87),
]

N_BUSES = 118
CLUSTER_CENTERS = [
    (40.0, 40.0), (140.0, 40.0), (240.0, 40.0), (340.0, 40.0),
    (40.0, 160.0), (140.0, 160.0), (240.0, 160.0), (340.0, 160.0),
]
CLUSTER_SIZES = [14, 14, 13, 13, 13, 13, 13, 14]
D_KM = 45.0


def parse_branches(text):
    tokens = text.split()
    assert len(tokens) % 2 == 0
    pairs = [(int(tokens[i]), int(tokens[i + 1])) for i in range(0, len(tokens), 2)]
    return pairs


def substation_groups():
    """Map each bus to its substation group, numbered by ascending min bus."""
    absorbed = {}
    for group in MERGED:
        lead = min(group)
        for bus in group:
            if bus != lead:
                absorbed[bus] = lead
    groups = []
    for bus in range(1, N_BUSES + 1):
        if bus in absorbed:
            continue
        members = [bus] + sorted(b for b, lead in absorbed.items() if lead == bus)
        groups.append(tuple(members))
    return groups


def cluster_positions(count):
    """Deterministic ring layout inside each cluster (radius 8..17 km)."""
    positions = []
    start = 0
    for center, size in zip(CLUSTER_CENTERS, CLUSTER_SIZES):
        for j in range(size):
            angle = 2 * math.pi * j / size
            radius = 8.0 + 9.0 * ((j * 7) % 5) / 4.0
            x = center[0] + radius * math.cos(angle)
            y = center[1] + radius * math.sin(angle)
            positions.append((round(x, 3), round(y, 3)))
        start += size
    assert start == count == len(positions)
    return positions


def main():
    stock = parse_branches(STOCK_BRANCHES)
    assert len(stock) == 186, len(stock)
    branches = stock + EXTRA_BRANCHES
    groups = substation_groups()
    assert len(groups) == 107, len(groups)
    positions = cluster_positions(len(groups))

    lines = [
        "# 118-bus transmission case grouped into 107 substations.",
        "#",
        "# Generated by scripts/build_case118.py; see that script for the",
        "# grouping, layout, and reinforcement-tie rationale.  Substations are",
        "# numbered by ascending lowest bus id.  With a region distance of",
        "# 45 km the partition yields exactly eight regions; substations 61",
        "# ({68 69 116}) and 16 ({17 30}) are the control centers.",
        "",
    ]
    lines += [f"bus {b}" for b in range(1, N_BUSES + 1)]
    lines.append("")
    lines += [f"branch {a} {b}" for a, b in branches]
    lines.append("")
    for sid, (group, pos) in enumerate(zip(groups, positions), start=1):
        members = " ".join(str(b) for b in group)
        lines.append(f"substation {sid} {pos[0]:g} {pos[1]:g} : {members}")
    text = "\n".join(lines) + "\n"

    case = parse_power_case(text, name="ieee118")

    # Structural checks: the documented facts must emerge from the data.
    sub61 = case.substations[61]
    sub16 = case.substations[16]
    assert sub61.buses == (68, 69, 116), sub61
    assert sub16.buses == (17, 30), sub16
    main_cc, backup_cc = select_control_centers(case)
    assert (main_cc, backup_cc) == (61, 16), (
        main_cc,
        backup_cc,
        substation_connectivity(case, 61),
        substation_connectivity(case, 16),
    )
    regions = partition_regions(case, D_KM)
    assert len(regions) == 8, [r.members for r in regions]
    pmus = place_pmus(case)
    covered = set()
    adjacency = {b: {b} for b in case.buses}
    for a, b in case.branches:
        adjacency[a].add(b)
        adjacency[b].add(a)
    for bus in pmus:
        covered |= adjacency[bus]
    assert covered == set(case.buses)

    out = os.path.join(os.path.dirname(__file__), "..", "cases", "ieee118.case")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {os.path.normpath(out)}")
    print(f"substations={len(case.substations)} branches={len(case.branches)}")
    print(f"main_cc={main_cc} (conn {substation_connectivity(case, main_cc)}) "
          f"backup_cc={backup_cc} (conn {substation_connectivity(case, backup_cc)})")
    print(f"regions at d={D_KM}: {len(regions)} sizes={[len(r.members) for r in regions]}")
    print(f"pmu buses: {len(pmus)}")


if __name__ == "__main__":
    main()
