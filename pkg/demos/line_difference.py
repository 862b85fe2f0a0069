"""Do two lines spread over clusters differently?  And from what sample size on?

Each line's cluster-membership distribution is compared with the Hellinger
distance; permuting the line ids gives its null distribution.  Growing the
per-line sample from 2 to 30 gives a p-value curve, and the answering time is
the first size after which every p-value stays below alpha.
"""

import numpy as np

from ssclust import answering_time, line_difference_test

rng = np.random.default_rng(11)
p_line_a = np.array([0.7, 0.2, 0.1])
p_line_b = np.array([0.1, 0.2, 0.7])

# one nested sequence: each dataset extends the previous one
a = rng.choice(3, size=30, p=p_line_a)
b = rng.choice(3, size=30, p=p_line_b)

p_values = {}
for q in range(2, 31):
    clusters = np.concatenate([a[:q], b[:q]])
    lines = np.repeat([0, 1], q)
    p_values[q] = line_difference_test(clusters, lines, B=499, seed=q).p_value

for q in (2, 5, 10, 15, 20, 25, 30):
    print(f"q={q:2d}  p={p_values[q]:.3f}")
for alpha in (0.01, 0.05, 0.1):
    print(f"answering time at alpha={alpha}: {answering_time(p_values, alpha)}")
