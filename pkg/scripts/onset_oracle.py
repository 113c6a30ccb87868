"""Bifurcation onset of the stretched cylinder from the zero-wavenumber determinant."""
import argparse

from surfelast import benchmarks as bm


def main():
    argparse.ArgumentParser(description=__doc__).parse_args()
    o = bm.onset_numbers()
    print(f"lambda 0.6: gamma_t = {o['lam0.6'].gamma_t:.6f}")
    print(f"lambda 1.0: gamma_t = {o['lam1.0'].gamma_t:.6f}")
    print("alpha_t \\ lambda " + " ".join(f"{lam:>7g}" for lam in o["lambdas"]))
    for al, row in zip(o["alphas"], o["grid"]):
        print(f"{al:>16g} " + " ".join(f"{g:7.3f}" for g in row))
    print(f"monotone in alpha_t: {o['monotone_in_alpha']}")


if __name__ == "__main__":
    main()
