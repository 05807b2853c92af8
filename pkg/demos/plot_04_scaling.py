"""
How contrastive cost grows with the number of views
===================================================

Best-Other evaluates V-1 view pairs per batch, Pairwise evaluates V(V-1)/2.
Timing one epoch of InfoNCE for each and fitting a log-log slope shows the
linear versus quadratic growth.
"""

from dwcl.bench import run_bench
from dwcl.weights import plan_pairs

for V in (2, 4, 8):
    print(f"V={V}: best-other {len(plan_pairs('bestother', V, 0))} pairs, "
          f"pairwise {len(plan_pairs('pairwise', V))} pairs")

rows, exponents = run_bench(view_counts=(4, 8, 16), batch=64, dim=32, n_batches=2, repeats=2)
for row in rows:
    print(f"V={row['views']:<3} {row['mechanism']:<10} {row['seconds'] * 1e3:8.1f} ms")
print("fitted growth exponents:", {k: round(v, 2) for k, v in exponents.items()})
