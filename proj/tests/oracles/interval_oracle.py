"""Reference binomial intervals from statsmodels (normal = Wald, wilson)."""
from statsmodels.stats.proportion import proportion_confint

CASES = [(0, 1), (1, 1), (7, 10), (55, 100), (3, 40), (650, 1000)]

if __name__ == "__main__":
    for k, n in CASES:
        for method in ("normal", "wilson"):
            lo, hi = proportion_confint(k, n, alpha=0.05, method=method)
            print(f"{method:6s} k={k:4d} n={n:4d} lo={max(lo, 0.0)!r} hi={min(hi, 1.0)!r}")
