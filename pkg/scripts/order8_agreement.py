"""Compare F_2[z]/z^3 with Z_2[2^(1/2)]/2^(3/2) beyond the tabulated weights.

Both rings have order 8 and residue field F_2.  Their K-groups agree in
weights 1..8; whether this persists is an open experiment, so this script
only reports what it finds.

    python scripts/order8_agreement.py --weights 1..12
"""

from __future__ import annotations

import argparse
import time

from kchain.cli import parse_weights
from kchain.prism_envelope import FieldSpec
from kchain.syntomic import syntomic_cohomology

RINGS = {
    "F_2[z]/z^3 (E = z^3 - 2)": FieldSpec(2, (-2, 0, 0, 1)),
    "Z_2[2^(1/2)]/2^(3/2) (E = z^2 - 2)": FieldSpec(2, (-2, 0, 1)),
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--weights", type=parse_weights, default=(1, 12))
    args = ap.parse_args()
    lo, hi = args.weights
    names = list(RINGS)
    disagreements = []
    for i in range(lo, hi + 1):
        row = []
        for name in names:
            t0 = time.perf_counter()
            res = syntomic_cohomology(RINGS[name], 3, i)
            row.append((res.H1.exponents, res.H2.exponents, time.perf_counter() - t0))
        same = row[0][:2] == row[1][:2]
        if not same:
            disagreements.append(i)
        def cell(a, b, t):
            even = f" K_{2 * i - 2}={','.join(map(str, b)) or '0'}" if i >= 2 else ""
            return f"K_{2 * i - 1}={','.join(map(str, a)) or '0'}{even} ({t:.1f}s)"

        cells = "   ".join(cell(*c) for c in row)
        print(f"i={i:2d}  {'same' if same else 'DIFFER'}   {cells}", flush=True)
    print("agree in all computed weights" if not disagreements else f"differ at weights {disagreements}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
