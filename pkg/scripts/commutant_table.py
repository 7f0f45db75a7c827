"""Table of commutant dimensions and graph-square parameter counts."""

import argparse
import time

from gqms.graphs import (commutant_basis, commutant_dimension_spectral, complete, connected_components,
                         cycle, cycle_commutant_dim_formula, disjoint_union)
from gqms.pencil import gqms_affine


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-cycle", type=int, default=8)
    args = ap.parse_args()
    graphs = [cycle(n) for n in range(3, args.max_cycle + 1)]
    graphs += [complete(n) for n in range(3, 7)]
    graphs.append(disjoint_union(cycle(3), cycle(3)))
    print(f"{'graph':24s} {'spec':>5s} {'null':>5s} {'form':>5s} {'N':>3s} {'params':>6s} {'d-N':>5s} {'sec':>6s}")
    for G in graphs:
        t = time.monotonic()
        d = commutant_dimension_spectral(G)
        dn = commutant_basis(G).dimension
        form = cycle_commutant_dim_formula(G.n) if G.name.startswith("cycle:") else "-"
        N = connected_components(G).count
        p = gqms_affine(G, 1).n_params
        print(f"{G.name:24s} {d:5d} {dn:5d} {form!s:>5s} {N:3d} {p:6d} {d - N:5d} {time.monotonic() - t:6.2f}")


if __name__ == "__main__":
    main()
