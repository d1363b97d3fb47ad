#!/usr/bin/env python3
"""Rewrite a farm-level outbreak table into the id,x,y,infection_day,removal_day layout read by `cilm`."""

import argparse
import csv
import sys


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--x", default="x", help="easting column")
    p.add_argument("--y", default="y", help="northing column")
    p.add_argument("--infection", default="infection_day")
    p.add_argument("--removal", default="removal_day", help="cull date column")
    p.add_argument("--scale", type=float, default=1.0, help="divide coordinates by this")
    args = p.parse_args()

    with open(args.input, newline="") as src, open(args.output, "w", newline="") as dst:
        reader = csv.DictReader(src)
        missing = {args.x, args.y, args.infection, args.removal} - set(reader.fieldnames or [])
        if missing:
            print(f"fmd_to_csv: missing columns: {', '.join(sorted(missing))}", file=sys.stderr)
            return 2
        out = csv.writer(dst, lineterminator="\n")
        out.writerow(["id", "x", "y", "infection_day", "removal_day"])
        for i, row in enumerate(reader):
            out.writerow([
                i,
                float(row[args.x]) / args.scale,
                float(row[args.y]) / args.scale,
                row[args.infection].strip(),
                row[args.removal].strip(),
            ])
    return 0


if __name__ == "__main__":
    sys.exit(main())
