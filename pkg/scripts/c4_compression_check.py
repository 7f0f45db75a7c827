"""Compress 4-cycle projection squares onto random 4-cycle squares.

For each sampled B (random square averaged over rotations) build U, V with
V* U V = B and U a projection square commuting with the 4-cycle, then check
everything by direct arithmetic.  Since B is a compression of a single
projection square, no separation certificate can exist for it.

    python scripts/c4_compression_check.py --samples 200 --s 2 --seed 0
"""

import argparse

import numpy as np

from gqms.graphs import cycle
from gqms.magic import classify, graph_commutation_residual, verify_magic
from gqms.separation import c4_dilation, candidate_seed, make_candidate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--s", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    C4 = cycle(4)
    worst = dict(compression=0.0, projection=0.0, magic=0.0, commutation=0.0, isometry=0.0)
    for k in range(args.samples):
        B = make_candidate(candidate_seed(args.seed, k), args.s)
        d = c4_dilation(B)
        flags = classify(d.U, 1e-9)
        assert flags.in_P, f"sample {k}: dilation is not a projection square"
        worst["compression"] = max(worst["compression"], d.compression_error)
        worst["projection"] = max(worst["projection"], d.projection_error)
        worst["magic"] = max(worst["magic"], verify_magic(d.U).magic_residual)
        worst["commutation"] = max(worst["commutation"], graph_commutation_residual(d.U, C4))
        iso = np.abs(d.V.conj().T @ d.V - np.eye(args.s)).max()
        worst["isometry"] = max(worst["isometry"], float(iso))
    print(f"{args.samples} samples, s={args.s}, dilation size {4 * args.s}")
    for key, val in worst.items():
        print(f"  max {key:12s} error {val:.2e}")


if __name__ == "__main__":
    main()
