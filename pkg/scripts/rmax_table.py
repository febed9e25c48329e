"""Print the variance-reduction radius r_max(d) next to reference values."""
import argparse

from fsquad.analysis import rmax_solve

REFERENCE = {10: 1.208, 16: 1.1964, 20: 1.1896, 22: 1.1909, 50: 1.1837, 54: 1.1831, 100: 1.18, 200: 1.1787}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default=",".join(map(str, REFERENCE)))
    args = ap.parse_args()
    print(f"{'d':>5} {'r_max':>10} {'reference':>10} {'diff':>9}")
    for d in map(int, args.dims.split(",")):
        r = rmax_solve(d)
        ref = REFERENCE.get(d)
        tail = f"{ref:>10.4f} {r - ref:>+9.4f}" if ref else ""
        print(f"{d:>5} {r:>10.5f} {tail}")


if __name__ == "__main__":
    main()
