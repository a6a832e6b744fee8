"""
Curvature of balls in a Gaussian space
======================================

For the spectrum ``lambda_k = 1/(pi k)^2`` a small centred ball keeps the
curvature functional ``h`` bounded above across truncations, while a large
ball does not.  This walk-through prints the closed-form verdicts, the sampled
constants and the blow-up witness.
"""

# %%
import numpy as np

from oulab.geometry import (
    SamplerConfig,
    Sphere,
    constants_ABC,
    sphere_admissibility,
    sphere_blowup_witness,
)
from oulab.spectral import inverse_pi_sq

measure = inverse_pi_sq(50)
print("trace of Q:", measure.full_trace, " (1/6 =", 1 / 6, ")")
print("sum over k >= 2:", measure.full_trace - measure.eigenvalues[0])

# %%
# Closed-form classification.
for r in (0.1, 0.5):
    print(f"r = {r}: {sphere_admissibility(measure, np.zeros(1), r)}")

# %%
# Sampled sup of h on the small ball: it stays negative for every n.
cfg = SamplerConfig(n_starts=256, ascent_starts=8)
for n in (2, 5, 10, 20):
    rep = constants_ABC(measure.truncate(n), Sphere([0.0], 0.1, n), cfg)
    print(f"n = {n:2d}  A = {rep.A:.4f}  B = {rep.B:.4f}  C = {rep.C:.4f}")

# %%
# On the large ball the value of H_n at r_n e_n grows without bound.
for n in (3, 5, 10, 20, 50):
    print(f"n = {n:2d}  witness = {sphere_blowup_witness(measure, np.zeros(1), 0.5, n):10.3f}")
