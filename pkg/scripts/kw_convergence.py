"""Grid refinement study for the scalar Kazdan-Warner solver.

A smooth u* is fixed in the continuum and f is built from the continuous
Laplacian, so the discrete solution differs from u* by the truncation error
of the 5-point stencil.
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from vortexlab.kazdan_warner import KWProblem, solve_kw
from vortexlab.surface import TorusGrid, smooth_periodic


@dataclass
class ConvergenceConfig:
    grids: tuple = (16, 32, 64, 128, 256)
    seed: int = 0
    amplitude: float = 0.5


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    cfg = ConvergenceConfig(seed=ap.parse_args().seed)
    field = smooth_periodic(TorusGrid(4, 4), np.random.default_rng(cfg.seed), 2, cfg.amplitude)
    prev = None
    print(f"{'n':>5} {'error':>12} {'order':>6} {'newton':>6} {'residual':>10}")
    for n in cfg.grids:
        g = TorusGrid(n, n)
        X, Y = g.mesh()
        h = 1.0 + 0.5 * np.sin(2 * np.pi * X) ** 2
        u = field(X, Y)
        rep = solve_kw(KWProblem(g, h, field.laplacian(X, Y) + np.exp(u) * h), certify=False)
        err = float(np.max(np.abs(rep.u - u)))
        order = "" if prev is None else f"{math.log2(prev / err):.2f}"
        print(f"{n:>5} {err:>12.4e} {order:>6} {rep.newton_iters:>6} {rep.residual_sup:>10.2e}")
        prev = err


if __name__ == "__main__":
    main()
