"""Print the weighted invariant for a box of (weights, degree, genus).

Each row lists the localization value, the closed form and the virtual
dimension; the two values must agree exactly.
"""

import argparse
import itertools
from dataclasses import dataclass

from vortexlab.invariants import WeightedProblem, dimension_weighted, invariant_closed_form, invariant_weighted


@dataclass
class TableConfig:
    max_n: int = 3
    max_weight: int = 3
    max_degree: int = 3
    max_genus: int = 2


def rows(cfg: TableConfig):
    for n in range(1, cfg.max_n + 1):
        for ws in itertools.combinations_with_replacement(range(1, cfg.max_weight + 1), n):
            for d in range(cfg.max_degree + 1):
                for g in range(cfg.max_genus + 1):
                    p = WeightedProblem(ws, d, g)
                    if p.m >= 0:
                        yield p, invariant_weighted(p), invariant_closed_form(p), dimension_weighted(p)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, val in TableConfig().__dict__.items():
        ap.add_argument("--" + name.replace("_", "-"), type=int, default=val)
    cfg = TableConfig(**vars(ap.parse_args()))
    print(f"{'weights':<12} {'d':>2} {'g':>2} {'m':>3} {'dim':>4} {'phi':>14}  agree")
    bad = 0
    for p, phi, closed, dim in rows(cfg):
        bad += phi != closed
        print(f"{','.join(map(str, p.weights)):<12} {p.degree:>2} {p.genus:>2} {p.m:>3} {dim:>4} {str(phi):>14}  {phi == closed}")
    print(f"mismatches: {bad}")


if __name__ == "__main__":
    main()
