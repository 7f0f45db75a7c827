"""Run the 4-cycle separation search and write a certificate or the report.

    python scripts/search_counterexample.py --budget 2000 --seed 42
"""

import argparse
import time

from gqms import jsonio
from gqms.separation import (SearchConfig, Variant, counterexample_search, save_certificate,
                             search_report_json)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--budget", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--variant", default="row_only", choices=[v.value for v in Variant])
    ap.add_argument("--refine", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--out", default="cert.json")
    ap.add_argument("--report", default="search_report.json")
    args = ap.parse_args()
    cfg = SearchConfig(budget=args.budget, seed=args.seed, variant=Variant(args.variant),
                       refine_steps=args.refine, jobs=args.jobs, time_limit=args.time_limit)
    t0 = time.monotonic()

    best = [float("inf")]

    def progress(i, obj):
        best[0] = min(best[0], obj)
        if i % 100 == 0:
            print(f"[{time.monotonic() - t0:7.1f}s] candidate {i}: best {best[0]:.3e}", flush=True)

    rep = counterexample_search(cfg, progress)
    if rep.found:
        save_certificate(args.out, rep.B, rep.certificate, rep.seed, rep.index)
        print(f"certificate written to {args.out}: objective {rep.certificate.objective:.3e}")
    else:
        jsonio.dump(search_report_json(rep, cfg), args.report)
        print(f"no certificate in {rep.evaluated} candidates; best {rep.best_objective:.3e} "
              f"(seed {rep.best_seed}); report in {args.report}")


if __name__ == "__main__":
    main()
