"""The ingredients of an information-theoretic lower bound, checked numerically.

Starting from the expected OFUL design matrix on the sphere, the script
checks that its weakest direction is nearly orthogonal to the optimal
action, builds a perturbed parameter along that direction whose optimal
caps do not overlap, and compares the Gaussian KL divergence of the two
bandits with the Pinsker bound on the cap probabilities.

Run: python demos/lower_bound_chain.py
"""

import math

from banditlab.policies import OFUL
from banditlab.spectral import proof_chain

if __name__ == "__main__":
    n = 2048
    rep = proof_chain(OFUL(), 3, n, 10, 0, eps=10 / math.sqrt(n))
    print(f"alignment of weakest eigenvector with optimum: {rep.alignment.value:.4f}")
    print(f"perturbation size alpha = {rep.alpha:.4f}, caps disjoint: {rep.disjoint}")
    print(f"KL between the two bandits: {rep.kl_lhs:.3f}")
    print(f"Pinsker bound from cap probabilities {rep.z_theta:.3f} vs {rep.z_theta_prime:.3f}: "
          f"{rep.pinsker.bound:.4f}")
