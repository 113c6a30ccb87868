"""Long cylinder: FE loss of stability, branch switching and the alpha contrast."""
import argparse

from surfelast import benchmarks as bm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("what", choices=["onset", "post", "homogeneity"])
    ap.add_argument("--lengths", type=float, nargs="+", default=[30.0, 40.0])
    ap.add_argument("--lam", type=float, default=0.6, help="axial stretch for the onset runs")
    ap.add_argument("--gammas", type=float, nargs="+", default=[5.0, 5.3, 5.6],
                    help="coarse gamma_t ramp bracketing the onset")
    args = ap.parse_args()
    if args.what == "onset":
        for L in args.lengths:
            r = bm.cylinder_onset(lam=args.lam, L_t=L, gammas=args.gammas)
            print(f"lambda {args.lam:g}, L_t {L:g}: bracket {r['bracket']}, oracle {r['oracle']:.4f}, "
                  f"{r['ndof']} dofs, {r['runtime']:.1f}s")
    elif args.what == "post":
        p = bm.post_bifurcation()
        if p["switched"] is None:
            print("homogeneous state still stable")
            return
        print(f"switched state stable {p['stable']}, lambda_min {p['lambda_min']:.3e}")
        print(f"energy {p['energy_switched']:.4f} vs homogeneous {p['energy_homogeneous']:.4f}")
        print(f"end radii {p['r_ends']}, homogeneous {p['r_homogeneous']:.4f}, monotone {p['monotone']}")
    else:
        h = bm.homogeneity_check()
        print(f"stable {h['stable']}, branch {h['branch']}, inhomogeneity {h['inhomogeneity']:.2e}, "
              f"oracle onset {h['onset_oracle']:.4f}")


if __name__ == "__main__":
    main()
