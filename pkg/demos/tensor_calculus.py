"""Tensor calculus on the plane: metrics, Christoffel symbols, strain.

Everything here has a closed form, so each computed object is printed
next to the value it must reproduce.
"""

import numpy as np

from greenvar.tensors import (
    VectorField,
    christoffel,
    conformal_metric,
    divergence,
    euclidean_metric,
    strain_tensor,
    volume_density,
)

# --- 1. a conformally flat metric g = e^{2 phi} delta with phi = x^1

met = conformal_metric(lambda x: x[..., 0],
                       lambda x: np.stack([np.ones_like(x[..., 0]),
                                           np.zeros_like(x[..., 0])], axis=-1))
x = np.array([0.3, -0.2])
print("metric at", x)
print(met(x))
print("volume density e^{2 phi} =", volume_density(met, x),
      " expected", np.exp(2 * x[0]))

# --- 2. Christoffel symbols; for phi = x^1 the nonzero ones are +-1

gamma = christoffel(met, x)
print("\nGamma^1_11 =", gamma[0, 0, 0], " expected 1")
print("Gamma^1_22 =", gamma[0, 1, 1], " expected -1")
print("Gamma^2_12 =", gamma[1, 0, 1], " expected 1")

# --- 3. strain tensor D_ij = half the Lie derivative of g along v

flat = euclidean_metric(2)
v = VectorField(2, lambda p: np.stack([p[..., 0] * p[..., 1],
                                       np.zeros_like(p[..., 0])], axis=-1))
pt = np.array([1.0, 2.0])
print("\nstrain of v = (x y, 0) at", pt)
print(strain_tensor(flat, v, pt))
print("expected [[2, 0.5], [0.5, 0]]")

# rigid rotation is a Killing field of the flat metric: D identically 0
rot = VectorField(
    2, lambda p: np.stack([-p[..., 1], p[..., 0]], axis=-1),
    jacobian=lambda p: np.broadcast_to(np.array([[0.0, -1.0], [1.0, 0.0]]),
                                       p.shape[:-1] + (2, 2)))
pts = np.random.default_rng(3).uniform(-1, 1, (5, 2))
D = strain_tensor(flat, rot, pts)
print("\nrotation strain, max |D| over 5 points:", np.max(np.abs(D)))

# --- 4. covariant divergence picks up the metric connection

dil = VectorField(2, lambda p: np.asarray(p, dtype=float))
met2 = conformal_metric(lambda x: 0.2 * x[..., 0],
                        lambda x: np.stack([0.2 * np.ones_like(x[..., 0]),
                                            np.zeros_like(x[..., 0])], axis=-1))
pt = np.array([0.4, 0.1])
print("\ndiv_g(x) at", pt, "=", divergence(met2, dil, pt),
      " expected 2 + 0.4 x^1 =", 2 + 0.4 * pt[0])
