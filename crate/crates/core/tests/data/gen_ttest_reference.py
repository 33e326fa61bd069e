"""Regenerates ttest_reference.json with mpmath at 50 significant digits.

    python3 gen_ttest_reference.py > ttest_reference.json
"""
import json
import random

import mpmath

mpmath.mp.dps = 50


def two_tailed_p(t, df):
    t = mpmath.mpf(t)
    x = df / (df + t * t)
    return mpmath.betainc(mpmath.mpf(df) / 2, mpmath.mpf(1) / 2, 0, x, regularized=True)


def paired(a, b):
    d = [mpmath.mpf(x) - mpmath.mpf(y) for x, y in zip(a, b)]
    n = len(d)
    mean = sum(d) / n
    var = sum((v - mean) ** 2 for v in d) / (n - 1)
    t = mean / (mpmath.sqrt(var) / mpmath.sqrt(n))
    return t, two_tailed_p(t, n - 1)


grid = []
for n in range(2, 31):
    for t in [0.0, 0.05, 0.3, 0.7, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0, 25.0, 60.0]:
        grid.append({"df": n - 1, "t": t, "p": float(two_tailed_p(t, n - 1))})

vectors = []
rng = random.Random(20240917)
for i in range(50):
    n = 2 + i % 29
    a = [rng.uniform(0.4, 1.0) for _ in range(n)]
    b = [x - rng.gauss(0.02, 0.05) for x in a]
    t, p = paired(a, b)
    vectors.append({"a": a, "b": b, "t": float(t), "p": float(p)})

json.dump({"grid": grid, "vectors": vectors}, __import__("sys").stdout, indent=1)
