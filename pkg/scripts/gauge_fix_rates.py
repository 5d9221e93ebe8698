"""Compare exact-Newton and frozen linearizations of Coulomb gauge fixing.

Prints the slice residual history of each run and the pooled contraction
exponent of each linearization.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from vortexlab.gauge_fix import EXACT, FROZEN, contraction_exponent, coulomb_fix, random_perturbation
from vortexlab.surface import LatticeConnection, TorusGrid


@dataclass
class RatesConfig:
    n: int = 32
    samples: int = 5
    size: float = 0.05
    background: float = 0.5
    seed: int = 0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, val in RatesConfig().__dict__.items():
        ap.add_argument("--" + name, type=type(val), default=val)
    cfg = RatesConfig(**vars(ap.parse_args()))
    rng = np.random.default_rng(cfg.seed)
    grid = TorusGrid(cfg.n, cfg.n)
    A0 = LatticeConnection(grid, "su2", *random_perturbation(grid, "su2", rng, cfg.background))
    traces = {EXACT: [], FROZEN: []}
    for s in range(cfg.samples):
        ps, pt = random_perturbation(grid, "su2", rng, cfg.size)
        A = LatticeConnection(grid, "su2", A0.As + ps, A0.At + pt)
        for lin in traces:
            tr = coulomb_fix(A, A0, tol=1e-11, max_iter=60, linearization=lin)[2]
            traces[lin].append(tr)
            print(f"sample {s} {lin:<6} " + " ".join(f"{r:.1e}" for r in tr.residual_sup))
    for lin, trs in traces.items():
        print(f"{lin:<6} exponent {contraction_exponent(trs):.2f}, max steps {max(t.steps for t in trs)}")


if __name__ == "__main__":
    main()
