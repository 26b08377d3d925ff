"""Recompute every bundled reference table and report agreement.

    python scripts/reproduce_figures.py                 # everything
    python scripts/reproduce_figures.py z4 2.2.2.2      # selected tables
    python scripts/reproduce_figures.py --max-weight 8  # cap the weights

Results are written as machine-format JSON under --out (default
results/), one file per (table, n).
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass
from pathlib import Path

from kchain.cli import JobRequest, bundled_references, render_machine, run_job, verify


@dataclass
class Config:
    tables: list[str]
    max_weight: int | None
    out: Path
    cache_dir: str | None
    jobs: int


def parse_args() -> Config:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("tables", nargs="*", help="reference keys (default: all)")
    ap.add_argument("--max-weight", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--cache-dir", default=None)
    ap.add_argument("--jobs", type=int, default=1)
    a = ap.parse_args()
    return Config(a.tables, a.max_weight, a.out, a.cache_dir, a.jobs)


def main() -> int:
    cfg = parse_args()
    refs = bundled_references()
    keys = cfg.tables or list(refs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    failures = 0
    for key in keys:
        ref = refs[key]
        for n in ref.lengths():
            top_r = max(r for m, r in ref.entries if m == n)
            top_i = top_r // 2 + 1  # K_r comes from weight ceil(r/2), or r/2 + 1 when even
            if cfg.max_weight:
                top_i = min(top_i, cfg.max_weight)
            t0 = time.perf_counter()
            table = run_job(JobRequest(ref.spec, n, (1, top_i), cache_dir=cfg.cache_dir, jobs=cfg.jobs))
            report = verify(table, ref)
            (cfg.out / f"{key}_n{n}.json").write_text(render_machine(table))
            status = "ok" if report.ok else "MISMATCH"
            print(f"{key:8s} n={n}  weights 1..{top_i:2d}  {len(report.matches):3d}/{report.compared:3d}  {status}  ({time.perf_counter() - t0:.1f}s)", flush=True)
            if not report.ok:
                failures += 1
                print(report.render(), end="", flush=True)
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
