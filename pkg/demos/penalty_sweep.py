"""A small version of the penalty sweep.

For each unlabeled sample size the candidate fits are computed once and then
re-selected with every penalty argument in ``[n_u, n_u + n_s]``.  Expect the
lighter penalties to do at least as well when ``n_u`` is small, and the
curve to flatten as ``n_u`` grows.  Takes about twenty seconds.
"""

from ssclust.sim import penalty_sweep_experiment

res = penalty_sweep_experiment(n_u_list=(5, 20, 80), replicates=8, m_grid_size=6, restarts=2, seed=3)
means = res.mean_ari()

for n_u in res.config["n_u_list"]:
    ms = sorted(m for (u, m) in means if u == n_u)
    cells = "  ".join(f"m={m:5.0f}: {means[(n_u, m)]:.3f}" for m in ms)
    print(f"n_u={n_u:3d}  {cells}")
