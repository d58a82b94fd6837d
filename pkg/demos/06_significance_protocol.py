"""Deciding whether one training objective really beats another.

Two objectives trained with ten seeds each give ten paired exact-match
scores.  The protocol: check both samples for normality (Anderson-Darling
with estimated mean and variance, 0.752 critical value at the 0.05 level),
then run a one-tailed paired t-test on the per-seed differences.  The
verdict is about direction, not magnitude — "better with p < 0.05", not
"3.4 points better".

Run:  python3 demos/06_significance_protocol.py
"""

import numpy as np

from spanobj.stats import (
    RunSample,
    anderson_darling,
    paired_t_test_one_tailed,
    significance_report,
)

# Per-seed exact-match scores from two hypothetical ten-seed runs.
compound = np.array([71.2, 69.8, 70.4, 72.1, 70.9, 68.8, 71.7, 70.2, 69.5, 71.0])
independent = np.array([66.0, 67.2, 65.1, 66.8, 67.5, 64.9, 66.2, 65.7, 66.9, 65.4])

# --- Step 1: normality of each sample ----------------------------------------
for name, values in (("compound", compound), ("independent", independent)):
    res = anderson_darling(values)
    print(f"{name:12s} A^2={res.statistic:.4f}  adjusted={res.adjusted:.4f}  "
          f"verdict={res.verdict}")
print()

# A sample that is NOT plausibly normal (two separated lumps) for contrast:
lumpy = np.array([10.0, 10.1, 10.2, 10.1, 10.0, 50.0, 50.1, 49.9, 50.2, 50.0])
res = anderson_darling(lumpy)
print(f"{'lumpy':12s} A^2={res.statistic:.4f}  adjusted={res.adjusted:.4f}  "
      f"verdict={res.verdict}   (t-test premises would be shaky here)\n")

# --- Step 2: one-tailed paired t-test -----------------------------------------
# Pairing by seed removes the between-seed variance both objectives share.
t, p = paired_t_test_one_tailed(compound, independent)
print(f"one-tailed paired t-test (compound > independent): t={t:.4f}  p={p:.6f}")
print(f"significant at 0.05: {'yes' if p < 0.05 else 'no'}\n")

# --- The packaged report --------------------------------------------------------
# significance_report bundles both steps and formats one row per comparison;
# the `spanobj stats` command exposes the same thing on files.
report = significance_report(
    [RunSample("compound", compound), RunSample("independent", independent)],
    [("compound", "independent")],
)
print(report.format())
