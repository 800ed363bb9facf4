"""Which power of the third integral belongs inside the Kummer-Schwarz lambda.

Integrates three solutions of x'' = 3/2 x'^2/x - 2 b0 x^3 + 2 a0(t) x with an
independent fixed-step RK4, sets k1, k2 to the integrals pairing the target
with each particular solution, and evaluates the two-solution formula with
the square and with the cube of Gamma3 inside lambda.

    python scripts/ks2_exponent_oracle.py [--trials 5] [--seed 1]
"""

import argparse

import numpy as np

from _rk import rk4_path

B0 = -1.0
T1 = 0.5
STEPS = 2000


def rhs(t, y):
    x, v = y
    return np.array([v, 1.5 * v * v / x - 2 * B0 * x**3 + 2 * np.sin(t) * x])


def gamma(x0, v0, x1, v1):
    return (v0 * x1 - v1 * x0) ** 2 / (x0**3 * x1**3) + 4 * B0 * (x0**2 + x1**2) / (x0 * x1)


def formula(k1, k2, x1, v1, x2, v2, exponent, s):
    G = gamma(x1, v1, x2, v2)
    lam2 = 256 * B0**3 + k1 * k2 * G - 4 * B0 * (k1**2 + k2**2 + G**exponent)
    with np.errstate(invalid="ignore"):
        root = np.sqrt(lam2) * np.sqrt(G * x1 * x2 - 4 * B0 * (x1**2 + x2**2))
    num = (G * k1 - 8 * B0 * k2) * x1 + (G * k2 - 8 * B0 * k1) * x2 + 2 * s * root
    den = 16 * B0 * G + ((k1 * x1 - k2 * x2) ** 2 - 64 * B0**2 * (x1**2 + x2**2)) / (x1 * x2)
    return num / den


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for trial in range(args.trials):
        ic = np.column_stack([rng.uniform(0.5, 1.2, 3), rng.uniform(-0.6, 0.6, 3)])
        P = [rk4_path(rhs, y, T1, STEPS) for y in ic]
        k1 = gamma(*P[0][0], *P[1][0])
        k2 = gamma(*P[0][0], *P[2][0])
        line = [f"trial {trial}:"]
        for exponent in (2, 3):
            # the quasi-base root changes sign with the Wronskian, so take the better branch pointwise
            errs = [np.abs(formula(k1, k2, *P[1].T, *P[2].T, exponent, s) - P[0][:, 0]) for s in (1, -1)]
            err = np.nanmax(np.fmin(*errs)) if not np.all(np.isnan(errs)) else np.inf
            line.append(f"exponent {exponent} max error {err:.2e}")
        print("  ".join(line))


if __name__ == "__main__":
    main()
