"""Regenerate ``stats_fixture.json`` with an independent reference computation.

Pearson r is evaluated from its textbook definition in 50-digit mpmath
arithmetic; the Williams statistic uses a numpy determinant of the 3x3
correlation matrix, and its one-sided p-value the Student-t tail written as
a regularized incomplete beta function (mpmath). Nothing from the package
under test is imported::

    python tests/fixtures/generate_stats_fixture.py
"""

import json
import random
from pathlib import Path

import mpmath
import numpy as np

mpmath.mp.dps = 50


def pearson_reference(x, y):
    x = [mpmath.mpf(v) for v in x]
    y = [mpmath.mpf(v) for v in y]
    n = len(x)
    mx, my = mpmath.fsum(x) / n, mpmath.fsum(y) / n
    sxy = mpmath.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = mpmath.fsum((a - mx) ** 2 for a in x)
    syy = mpmath.fsum((b - my) ** 2 for b in y)
    return sxy / mpmath.sqrt(sxx * syy)


def t_sf(t, df):
    t, df = mpmath.mpf(t), mpmath.mpf(df)
    tail = mpmath.betainc(df / 2, mpmath.mpf(1) / 2, 0, df / (df + t * t), regularized=True) / 2
    return tail if t >= 0 else 1 - tail


def williams_reference(r12, r13, r23, n):
    k = np.linalg.det(np.array([[1, r12, r13], [r12, 1, r23], [r13, r23, 1]], dtype=np.float64))
    r12, r13, r23 = (mpmath.mpf(v) for v in (r12, r13, r23))
    t = (r12 - r13) * mpmath.sqrt((n - 1) * (1 + r23)) / mpmath.sqrt(
        2 * mpmath.mpf(k) * (n - 1) / (n - 3) + ((r12 + r13) ** 2 / 4) * (1 - r23) ** 3)
    return t, t_sf(t, n - 3)


def main():
    rng = random.Random(1234)
    cases = []
    while len(cases) < 50:
        n = rng.randint(5, 40)
        human = [rng.gauss(0, 1) for _ in range(n)]
        a = [h * rng.uniform(0, 2) + rng.gauss(0, rng.uniform(0.2, 2)) for h in human]
        b = [0.5 * x + rng.gauss(0, rng.uniform(0.2, 2)) for x in a]
        r12, r13, r23 = pearson_reference(human, a), pearson_reference(human, b), pearson_reference(a, b)
        r12, r13, r23 = float(r12), float(r13), float(r23)
        t, p = williams_reference(r12, r13, r23, n)
        cases.append({"human": human, "candidate": a, "baseline": b, "n": n,
                      "r12": r12, "r13": r13, "r23": r23, "t": float(t), "p": float(p)})
    path = Path(__file__).with_name("stats_fixture.json")
    path.write_text(json.dumps({"generator": "mpmath/numpy reference", "cases": cases}, indent=1) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
