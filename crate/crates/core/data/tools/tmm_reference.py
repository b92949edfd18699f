"""Reference R/T/A values for the Ag/GeSe3/Ag cavity, computed with Rouard's
recursive Fresnel method from the bundled tables. Pure standard library.

Usage: python3 tmm_reference.py
"""
import cmath
import csv
import math
import os

MATERIALS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "materials")


def load(name):
    rows = []
    with open(os.path.join(MATERIALS, name)) as f:
        lines = [line for line in f if not line.startswith("#")]
    for row in csv.DictReader(lines):
        rows.append((float(row["wavelength_nm"]), float(row["n"]), float(row["k"])))
    return rows


def index(table, wl):
    for (w0, n0, k0), (w1, n1, k1) in zip(table, table[1:]):
        if w0 <= wl <= w1:
            f = (wl - w0) / (w1 - w0)
            return complex(n0 + f * (n1 - n0), -(k0 + f * (k1 - k0)))
    raise ValueError(f"{wl} nm out of range")


def rouard(n_amb, films, n_sub, wl):
    """films: list of (N, d_nm) from the ambient side. N = n - ik."""
    media = [n_amb] + [n for n, _ in films] + [n_sub]
    r = (media[-2] - media[-1]) / (media[-2] + media[-1])
    t = 2 * media[-2] / (media[-2] + media[-1])
    for j in range(len(films) - 1, -1, -1):
        n_j, d = films[j]
        beta = 2 * math.pi * n_j * d / wl
        ph = cmath.exp(-1j * beta)
        left = media[j]
        r_i = (left - n_j) / (left + n_j)
        t_i = 2 * left / (left + n_j)
        den = 1 + r_i * r * ph * ph
        t = t_i * t * ph / den
        r = (r_i + r * ph * ph) / den
    R = abs(r) ** 2
    T = n_sub.real / n_amb.real * abs(t) ** 2
    return R, T, 1 - R - T


def main():
    ag, gese3, sio2 = load("ag.csv"), load("gese3.csv"), load("sio2.csv")
    for d, wl in [(28, 450), (78, 637), (103, 800), (51, 532), (78, 1000)]:
        films = [(index(ag, wl), 20.0), (index(gese3, wl), float(d)), (index(ag, wl), 100.0)]
        R, T, A = rouard(1 + 0j, films, index(sio2, wl), wl)
        print(f"({d}.0, {wl}.0, {R:.15e}, {T:.15e}, {A:.15e}),")


if __name__ == "__main__":
    main()
