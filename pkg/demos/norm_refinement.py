"""Learning the norm bound while playing.

OFUL needs an upper bound b on ||theta||. Starting from a loose b = 10 for a
parameter of norm 0.5, the epoch scheme doubles the epoch length, halves the
confidence level and, at each epoch end, replaces b by the largest norm in
the current confidence ellipsoid. The printout shows b shrinking towards
the truth and the regret staying within a small factor of OFUL that was
told the true norm.

Run: python demos/norm_refinement.py
"""

import numpy as np

from banditlab.harness import alb_experiment

RUNS, EPOCHS = 6, 5

if __name__ == "__main__":
    results = alb_experiment(3, 0.5, 10.0, 256, EPOCHS, RUNS, master_seed=0)
    b = np.array([rep.b_sequence for rep, _ in results])
    print("median b after each epoch:", np.round(np.median(b, axis=0), 3).tolist())
    alb = np.mean([rep.cumulative_regret for rep, _ in results])
    oracle = np.mean([o for _, o in results])
    print(f"mean regret: adaptive {alb:.1f}, known-norm {oracle:.1f}, ratio {alb / oracle:.2f}")
