"""Cube under growing surface energy: area history against the equal-volume sphere."""
import argparse

from surfelast import benchmarks as bm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3, help="tet10 subdivisions per octant edge")
    args = ap.parse_args()
    for model, label in (("fluid", "gamma"), ("isopoly", "alpha")):
        r = bm.cube(model, n=args.n)
        hist = " ".join(f"{a:.4f}" for a in r["areas"])
        print(f"{label}: area {hist}")
        print(f"  sphere {r['sphere_area']:.4f}, final {r['final_rel']:+.4f}, monotone {r['monotone']}, "
              f"{r['runtime']:.1f}s")


if __name__ == "__main__":
    main()
