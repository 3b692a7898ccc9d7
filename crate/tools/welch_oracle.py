"""Reference oracle: Welch t-test values computed with scipy, frozen before the Rust build."""
import numpy as np
from scipy import stats

rng = np.random.default_rng(20260814)

pairs = []
# the hand-checkable reference pair first: equal n, unit shift, t = -1 exactly
pairs.append(([1,2,3,4,5], [2,3,4,5,6]))
# 19 more fixed pairs with varied sizes/scales/overlaps
specs = [
    (3, 3, 0.0, 1.0, 0.5, 1.0),
    (5, 8, 0.0, 1.0, 0.0, 1.0),
    (10, 10, 5.0, 2.0, 5.5, 2.0),
    (12, 4, -3.0, 0.5, -2.0, 4.0),
    (30, 30, 100.0, 15.0, 98.0, 30.0),
    (7, 21, 0.0, 1.0, 3.0, 1.0),
    (2, 2, 1.0, 0.1, 1.2, 0.1),
    (50, 5, 10.0, 1.0, 10.0, 10.0),
    (15, 15, 0.0, 0.001, 0.0005, 0.001),
    (9, 9, 1e6, 1e4, 1.001e6, 1e4),
    (6, 6, -50.0, 5.0, 50.0, 5.0),
    (25, 40, 7.0, 3.0, 7.1, 0.3),
    (4, 4, 0.0, 1.0, 0.0, 1.0),
    (100, 100, 55.0, 12.0, 54.0, 11.0),
    (3, 17, 2.0, 2.0, 2.5, 0.5),
    (8, 8, 0.0, 10.0, 1.0, 0.01),
    (20, 20, 1.0, 1.0, 1.05, 1.0),
    (11, 13, 42.0, 6.0, 40.0, 9.0),
    (5, 5, 0.3, 0.2, 0.9, 0.7),
]
for (na, nb, ma, sa, mb, sb) in specs:
    a = np.round(rng.normal(ma, sa, na), 6)
    b = np.round(rng.normal(mb, sb, nb), 6)
    pairs.append((list(a), list(b)))

print("// generated by tools/welch_oracle.py (scipy %s)" % __import__('scipy').__version__)
for i, (a, b) in enumerate(pairs):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    r = stats.ttest_ind(a, b, equal_var=False)
    # Welch-Satterthwaite df
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = len(a), len(b)
    df = (va/na + vb/nb)**2 / ((va/na)**2/(na-1) + (vb/nb)**2/(nb-1))
    fa = ", ".join(repr(float(x)) for x in a)
    fb = ", ".join(repr(float(x)) for x in b)
    print(f"WelchCase {{ a: &[{fa}], b: &[{fb}], t: {float(r.statistic)!r}, df: {float(df)!r}, p: {float(r.pvalue)!r} }},")
