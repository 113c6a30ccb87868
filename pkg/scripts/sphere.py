"""Anisotropic sphere: eta and beta variants at matched ratios."""
import argparse

from surfelast import benchmarks as bm
from surfelast import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="+", default=list(ex.SPHERE_RATIOS))
    ap.add_argument("--n", type=int, default=10, help="octant subdivisions (15 is the reference mesh)")
    ap.add_argument("--iso", choices=["gamma", "alpha"], default="gamma")
    args = ap.parse_args()
    for ratio in args.ratios:
        steps = max(10, args.n)
        s = bm.sphere(args.iso, ratio, n=args.n, aniso_steps=steps)
        for k in ("eta", "beta"):
            v = s[k]
            if "error" in v:
                print(f"ratio {ratio:g} {k}: {v['error']}")
            else:
                print(f"ratio {ratio:g} {k}: polar {v['polar']:.4f}, equatorial {v['equatorial']:.4f}, "
                      f"{v['runtime']:.1f}s")
        if "max_node_gap" in s:
            print(f"ratio {ratio:g}: max node gap {s['max_node_gap']:.4f}")


if __name__ == "__main__":
    main()
