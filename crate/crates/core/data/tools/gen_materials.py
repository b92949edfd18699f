"""Regenerate the model-based material tables in ../materials.

ag.csv, pt.csv and ta.csv are transcribed by hand and are not touched here.
Usage: python3 gen_materials.py
"""
import math
import os

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "materials")
HC_EV_NM = 1239.84193

# GeSe3 model: Cauchy index plus an Urbach absorption tail and a constant
# absorption floor. Parameters reproduce the cavity resonances of
# Ag/GeSe3/Ag stacks (20 nm top Ag, 100 nm bottom Ag) at d = 28/51/78/103 nm
# in the blue/green/red/near-infrared.
CAUCHY = (2.309, 0.0920, 0.01128)  # n = a + b/l^2 + c/l^4, l in um
URBACH_K0 = 0.0126
URBACH_EG = 1.898  # eV
URBACH_EU = 0.188  # eV
URBACH_CAP = 3.0  # exponent cap, keeps k bounded deep in the UV
K_FLOOR = 0.0239


def gese3(wl_nm):
    l_um = wl_nm / 1000.0
    a, b, c = CAUCHY
    n = a + b / l_um**2 + c / l_um**4
    e = HC_EV_NM / wl_nm
    k = K_FLOOR + URBACH_K0 * math.exp(min((e - URBACH_EG) / URBACH_EU, URBACH_CAP))
    return n, k


def sio2(wl_nm):
    # Malitson (1965) Sellmeier fit for fused silica.
    l2 = (wl_nm / 1000.0) ** 2
    terms = ((0.6961663, 0.0684043), (0.4079426, 0.1162414), (0.8974794, 9.896161))
    return math.sqrt(1.0 + sum(b * l2 / (l2 - c * c) for b, c in terms)), 0.0


def write(name, header, rows):
    with open(os.path.join(OUT, name), "w") as f:
        for line in header:
            f.write(f"# {line}\n")
        f.write("wavelength_nm,n,k\n")
        for wl, n, k in rows:
            f.write(f"{wl:.1f},{n:.6f},{k:.6f}\n")


def main():
    grid = [350.0 + 10.0 * i for i in range(86)]  # 350..1200 nm
    write(
        "gese3.csv",
        [
            "GeSe3 (amorphous), model dispersion generated by data/tools/gen_materials.py.",
            "Not measured data: Cauchy index + Urbach tail + constant absorption floor,",
            f"a,b,c = {CAUCHY}, k0 = {URBACH_K0}, Eg = {URBACH_EG} eV, Eu = {URBACH_EU} eV, floor = {K_FLOOR}.",
        ],
        [(w, *gese3(w)) for w in grid],
    )
    write(
        "sio2.csv",
        ["Fused silica, Malitson Sellmeier formula, k = 0. Generated by data/tools/gen_materials.py."],
        [(w, *sio2(w)) for w in [300.0 + 10.0 * i for i in range(171)]],
    )
    write("air.csv", ["Air, n = 1, k = 0."], [(200.0, 1.0, 0.0), (2500.0, 1.0, 0.0)])


if __name__ == "__main__":
    main()
