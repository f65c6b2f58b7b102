"""How fast does the smallest eigenvalue of the design matrix grow?

On the unit sphere, Thompson sampling keeps probing every direction, so
lambda_min of the Gram matrix grows roughly like sqrt(n): the raw exponent
log(lambda_min) / log(n) settles near 1/2. On a p = 10 ball the action set
has nearly flat faces around the optimum, the sampler stops exploring and
the exponent stays well below 1/2.

Run: python demos/sphere_vs_pball.py  (about a minute on one core)
"""

import numpy as np

from banditlab import actionspace as asp
from banditlab.harness import summarize_ensemble, trace_ensemble
from banditlab.policies import PolicyConfig

N, TRIALS, SEED = 4096, 8, 0


def describe(label, space, theta):
    traces = trace_ensemble(space, theta, PolicyConfig(kind="lints"), N, TRIALS, SEED)
    s = summarize_ensemble(traces)
    print(f"{label}")
    print(f"  final mean exponent   {s.final_mean_exponent:.3f}")
    print(f"  final band lower edge {s.band.lower[-1]:.3f}")
    print(f"  fitted log-log slope  {s.report.fitted_slope:.3f}")
    print(f"  first crossing of 1/2 {s.report.n0_hat}")
    print()


if __name__ == "__main__":
    theta = np.zeros(3)
    theta[0] = 1.0
    describe("unit sphere, d = 3", asp.UnitSphere(3), theta)
    describe("p = 10 ball, d = 5, theta = ones", asp.PNormBall(5, 10.0), np.ones(5))
