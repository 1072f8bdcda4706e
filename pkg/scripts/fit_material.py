"""Fit the default bilinear Nitinol law to the FEA stress points.

Prints the fitted modulus and plateau stress that ship as the
``nitinol.material`` defaults of the hand spec.
"""

from tendonhand.nitinol import fit_bilinear

# (bending strain %, FEA stress MPa) at the DIP, PIP and MCP wires
POINTS = [(1.93, 455.0), (1.63, 370.0), (1.01, 355.0)]


def main():
    strains = [s / 100.0 for s, _ in POINTS]
    stresses = [q for _, q in POINTS]
    mat = fit_bilinear(strains, stresses)
    print(f"e_austenite_mpa    = {mat.e_austenite!r}")
    print(f"plateau_stress_mpa = {mat.plateau_stress!r}")
    print(f"onset strain       = {mat.plateau_onset_strain * 100:.4f} %")
    for (s, q) in POINTS:
        model = min(mat.e_austenite * s / 100.0, mat.plateau_stress)
        print(f"  strain {s:5.2f} %  FEA {q:6.1f} MPa  model {model:7.2f} MPa  ({(model - q) / q:+.1%})")


if __name__ == "__main__":
    main()
