"""Print the three-method coefficient table for one simulated sample.

    python scripts/run_table1.py [--seed 0] [--scenario paper]
"""

import argparse

from vwlasso.simulate import SCENARIOS, SimConfig, run_table1


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scenario", choices=SCENARIOS, default="paper")
    ap.add_argument("--n", type=int, default=100)
    args = ap.parse_args()

    cfg = SimConfig(n=args.n, seed=args.seed, scenario=args.scenario)
    table = run_table1(cfg)
    names = table.column_names
    print(f"{'method':<10}" + "".join(f"{c:>10}" for c in names) + f"{'zeros':>8}{'lambda':>12}")
    print(f"{'truth':<10}" + "".join(f"{b:>10.4f}" for b in cfg.true_beta))
    for i, m in enumerate(table.methods):
        row = table.coefficients[i]
        print(f"{m:<10}" + "".join(f"{v:>10.4f}" for v in row)
              + f"{table.zero_counts()[m]:>8}{table.lambdas[i]:>12.5f}")


if __name__ == "__main__":
    main()
