"""Compare a swept regime_table.csv with the published Tables II / III.

Usage:
    rotorlab sweep --config scripts/configs/table2_sweep.yaml --output runs/table2
    python scripts/compare_regime_table.py runs/table2/regime_table.csv --table 2
"""

import argparse

from rotorlab.io import read_table

STEPS = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
PUBLISHED = {
    2: ["LLLLLLL", "LLLLLII", "LLLLIII", "LLLIIID", "LLIIIDD", "LLIIDDD", "LIIDDDD"],
    3: ["LLLLLLL", "LLLLLLL", "LLLLLLL", "LLLLLLL", "LLLLIII", "LLLIIID", "LLLIIDD"],
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("table_csv")
    ap.add_argument("--table", type=int, choices=sorted(PUBLISHED), required=True)
    args = ap.parse_args()

    _, _, cells = read_table(args.table_csv)
    agree = total = 0
    print("lambda3\\lambda4 " + " ".join(f"{c:4g}" for c in STEPS))
    for l3, row in zip(STEPS, PUBLISHED[args.table]):
        line = []
        for l4, ref in zip(STEPS, row):
            got = cells.get((l3, l4), "?")
            total += 1
            agree += got == ref
            line.append(f"{got}/{ref}" if got != ref else f"  {ref} ")
        print(f"{l3:15g} " + " ".join(line))
    print(f"{agree}/{total} cells agree (mismatches shown as ours/published)")
    return 0 if agree == total else 1


if __name__ == "__main__":
    raise SystemExit(main())
