"""Regenerate src/qualsim/data/cardinal.calc from point triples on a small grid."""

from itertools import product
from pathlib import Path

NAMES = ["N", "NE", "E", "SE", "S", "SW", "W", "NW", "samepoint"]
# (sign dx, sign dy) of a relative to b -> relation of a to b
BY_SIGN = {
    (0, 1): "N", (1, 1): "NE", (1, 0): "E", (1, -1): "SE",
    (0, -1): "S", (-1, -1): "SW", (-1, 0): "W", (-1, 1): "NW", (0, 0): "samepoint",
}


def sign(v):
    return (v > 0) - (v < 0)


def rel(a, b):
    return BY_SIGN[(sign(a[0] - b[0]), sign(a[1] - b[1]))]


def main():
    pts = list(product(range(-2, 3), repeat=2))
    comp = {(r, s): set() for r in NAMES for s in NAMES}
    conv = {}
    for a, b in product(pts, repeat=2):
        conv[rel(a, b)] = rel(b, a)
    for a, b, c in product(pts, repeat=3):
        comp[(rel(a, b), rel(b, c))].add(rel(a, c))
    ring = NAMES[:8]
    lines = [
        "# Cardinal directions between points (projection-based), table version 1.",
        "# Q[a,b] = r reads \"a is r of b\".  Generated by tools/gen_cardinal.py",
        "# from all point triples in {-2..2}^2; do not edit by hand.",
        "",
        "calculus cardinal",
        "relations: " + " ".join(NAMES),
        "identity: samepoint",
        "",
        "converse:",
    ]
    lines += [f"  {r} -> {conv[r]}" for r in NAMES]
    lines += ["", "composition:"]
    for r in NAMES:
        for s in NAMES:
            cell = ", ".join(t for t in NAMES if t in comp[(r, s)])
            lines.append(f"  {r} ; {s} -> {{{cell}}}")
    lines += ["", "# compass ring plus samepoint adjacent to every direction", "neighbourhood:"]
    lines += [f"  {ring[i]} -- {ring[(i + 1) % 8]}" for i in range(8)]
    lines += [f"  samepoint -- {r}" for r in ring]
    out = Path(__file__).resolve().parents[1] / "src" / "qualsim" / "data" / "cardinal.calc"
    out.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
