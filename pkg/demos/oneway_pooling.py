"""Partial pooling on a one-way layout, read off the weight matrix.

Every point estimate is a weighted average of all observations. The
weight a cluster keeps for itself (shrinkage) grows with the cluster's
size and precision; the rest (pooling) is spread over the other
clusters. The closed form and the general engine agree to machine
precision.
"""

import numpy as np

from borrowfac import OneWayProblem, dense_weights, oneway_weights
from borrowfac.synth import oneway_model


def main():
    # five clusters: sizes 1..5, noisier toward the end
    problem = OneWayProblem(
        sizes=(1, 2, 3, 4, 5),
        phi2=(0.5, 0.5, 1.0, 2.0, 4.0),
        sigma2=1.0,
    )
    closed = oneway_weights(problem)
    engine = dense_weights(oneway_model(problem))
    expected = closed.observation_matrix(problem)
    print("closed form vs engine, max abs diff:",
          float(np.max(np.abs(engine - expected))))
    print()

    print(" cluster  size  phi^2   shrinkage   pooling")
    for j, (n_j, phi_j) in enumerate(zip(problem.sizes, problem.phi2)):
        shrink = float(closed.shrinkage[j])
        pool = float(closed.pooling[j])
        print(f"   {j}      {n_j}    {phi_j:4.1f}    {shrink:8.4f}  {pool:8.4f}")
    print()
    print("small, noisy clusters lean on the pool; big, precise ones do not.")

    # the first observation's full weight row: itself, then everyone else
    row = engine[0]
    print()
    print("weight row of observation 0:")
    print(np.array2string(row, precision=4, suppress_small=True))
    print("row sum:", float(row.sum()))


if __name__ == "__main__":
    main()
