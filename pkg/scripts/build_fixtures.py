"""Regenerate the bundled JSON fixtures under src/simpson/data/.

covid and smoking_coarse are reconstructed from the conditionals printed for
those examples; smoking_full holds the Whickham survey counts for women
aged 18-74 (Appleton, French and Vanderpump, 1996).
"""
from pathlib import Path

import numpy as np

from simpson.datasets import LabeledTable, from_joint, reconstruct_joint, save

DATA = Path(__file__).resolve().parents[1] / "src" / "simpson" / "data"


def covid():
    fine = [[0.0507, 0.150], [0.0490, 0.135]]
    b_given_a2 = (1 - 0.1017, 1 - 0.3141)
    rec = reconstruct_joint(fine, aggregate=(0.0608, 0.0760), b_given_a2=b_given_a2, p_a2=0.5)
    prov = (
        "COVID-19 case fatality, China (a2) vs Italy (~a2), ages 60-79 (b) vs 80+ (~b). "
        "Built from published p(a1|A2,B) = 0.0507, 0.0490, 0.150, 0.135 and "
        "p(~b|a2) = 0.1017, p(~b|~a2) = 0.3141; p(a1|a2) = 0.0608, p(a1|~a2) = 0.0760 "
        f"are redundant checks (residuals {rec.residuals}). "
        "A2 is a label, so p(a2) = 0.5 is a placeholder; the published p(~b) = 0.1012 is "
        "below both p(~b|a2) and p(~b|~a2) and cannot be matched by any p(a2)."
    )
    labels = {"A1": ["died", "survived"], "A2": ["China", "Italy"], "B": ["60-79", "80+"]}
    return from_joint(rec.table, labels, prov)


def smoking_coarse():
    fine = [[0.1820, 0.8056], [0.1206, 0.7829]]
    rec = reconstruct_joint(fine, aggregate=(0.2214, 0.2485), p_b=1 - 0.1334)
    w = rec.b_given_a2
    prov = (
        "Whickham women, died (a1) by smoker (a2) vs nonsmoker (~a2), ages 18-64 (b) vs 65-74 (~b); "
        "age group 75+ excluded. Built from published p(a1|A2,B) = 0.1820, 0.1206, 0.8056, 0.7829, "
        "p(a1|a2) = 0.2214, p(a1|~a2) = 0.2485 and p(~b) = 0.1334. Derived by total probability: "
        f"p(b|a2) = {w[0]:.6f}, p(b|~a2) = {w[1]:.6f}, p(a2) = {rec.p_a2:.6f}."
    )
    labels = {"A1": ["died", "alive"], "A2": ["smoker", "nonsmoker"], "B": ["18-64", "65-74"]}
    return from_joint(rec.table, labels, prov)


def smoking_full():
    # per age group: smoker died, smoker alive, nonsmoker died, nonsmoker alive
    counts = {
        "18-24": (2, 53, 1, 61),
        "25-34": (3, 121, 5, 152),
        "35-44": (14, 95, 7, 114),
        "45-54": (27, 103, 12, 66),
        "55-64": (51, 64, 40, 81),
        "65-74": (29, 7, 101, 28),
    }
    v = np.zeros((2, 2, len(counts)))
    for m, (sd, sa, nd, na) in enumerate(counts.values()):
        v[:, :, m] = [[sd, nd], [sa, na]]
    prov = (
        "Whickham survey women, 20-year follow-up (Appleton, French and Vanderpump 1996), "
        "counts by age at first survey. The 75+ group (smokers 13 died / 0 alive, "
        "nonsmokers 64 / 0) is excluded because nobody in it survived. These counts give "
        "p(B) = 0.0946, 0.2272, 0.1859, 0.1681, 0.1908, 0.1334 to four decimals."
    )
    labels = {"A1": ["died", "alive"], "A2": ["smoker", "nonsmoker"], "B": list(counts)}
    return LabeledTable(labels, v, "count", prov)


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    for name, build in (("covid", covid), ("smoking_coarse", smoking_coarse), ("smoking_full", smoking_full)):
        save(build(), DATA / f"{name}.json")
        print("wrote", DATA / f"{name}.json")


if __name__ == "__main__":
    main()
