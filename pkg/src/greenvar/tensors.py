"""Pointwise tensor calculus for low-dimensional Riemannian metrics.

Everything here operates on plain numpy arrays.  A point is an array of
shape ``(n,)`` and any operation also accepts a batch of points of shape
``(..., n)``, in which case the result gains the same leading axes.
Metric matrices are symmetric positive definite; violations raise
:class:`~greenvar.errors.DegenerateMetricError`.

Index conventions
-----------------
* metric derivative arrays follow ``dg[..., k, i, j] = d g_ij / d x^k``
* vector-field Jacobians follow ``J[..., i, j] = d v^i / d x^j``
* Christoffel arrays follow ``gamma[..., k, i, j] = Gamma^k_ij``
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateMetricError, DimensionMismatchError

__all__ = [
    "MetricField",
    "VectorField",
    "TensorAtPoint",
    "euclidean_metric",
    "conformal_metric",
    "christoffel",
    "raise_index",
    "lower_index",
    "covariant_derivative_vector",
    "strain_tensor",
    "divergence",
    "volume_density",
    "trace_tensor",
]

# Default relative step for centered finite differences of field callbacks.
FD_STEP = 1e-5

# Tolerance on symmetry of user-supplied metric matrices.
SYMMETRY_TOL = 1e-9


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise DimensionMismatchError(
            f"expected points with last axis {dim}, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("point coordinates must be finite")
    return x


def _fd_scale(x, step):
    # h = step * (1 + |x|), one scalar per point, kept broadcastable.
    return step * (1.0 + np.linalg.norm(x, axis=-1))


class MetricField:
    """A metric tensor field ``g_ij(x)`` with optional analytic derivative.

    Parameters
    ----------
    dim : int
        Dimension ``n >= 2`` of the underlying space.
    matrix : callable
        Maps points ``(..., n)`` to symmetric matrices ``(..., n, n)``.
    derivative : callable, optional
        Maps points to ``(..., n, n, n)`` arrays ``dg[k, i, j] = d_k g_ij``.
        When omitted, centered finite differences with step
        ``FD_STEP * (1 + |x|)`` are used.
    """

    def __init__(self, dim: int, matrix: Callable, derivative: Optional[Callable] = None,
                 fd_step: float = FD_STEP, name: str = "metric"):
        if dim < 2:
            raise DimensionMismatchError("metric dimension must be >= 2")
        self.dim = int(dim)
        self._matrix = matrix
        self._derivative = derivative
        self.fd_step = float(fd_step)
        self.name = name

    def __call__(self, x):
        x = _as_points(x, self.dim)
        g = np.asarray(self._matrix(x), dtype=float)
        if g.shape != x.shape[:-1] + (self.dim, self.dim):
            raise DimensionMismatchError(
                f"metric callback returned shape {g.shape} for points {x.shape}"
            )
        asym = np.max(np.abs(g - np.swapaxes(g, -2, -1)), initial=0.0)
        if asym > SYMMETRY_TOL:
            raise DegenerateMetricError(f"metric matrix asymmetric by {asym:.3e}")
        return g

    def derivative(self, x):
        """Return ``dg[..., k, i, j] = d_k g_ij`` at ``x``."""
        x = _as_points(x, self.dim)
        if self._derivative is not None:
            dg = np.asarray(self._derivative(x), dtype=float)
            want = x.shape[:-1] + (self.dim,) * 3
            if dg.shape != want:
                raise DimensionMismatchError(
                    f"metric derivative callback returned {dg.shape}, expected {want}"
                )
            return dg
        return self._fd_derivative(x)

    def _fd_derivative(self, x):
        n = self.dim
        h = _fd_scale(x, self.fd_step)
        out = np.empty(x.shape[:-1] + (n, n, n))
        for k in range(n):
            dx = np.zeros_like(x)
            dx[..., k] = h
            out[..., k, :, :] = (self(x + dx) - self(x - dx)) / (2.0 * h)[..., None, None]
        return out

    def inverse(self, x):
        g = self(x)
        _cholesky(g)  # SPD gate; raises on degeneracy
        return np.linalg.inv(g)

    def __repr__(self):
        return f"MetricField(dim={self.dim}, name={self.name!r})"


class VectorField:
    """A vector field ``v^i(x)`` with optional analytic Jacobian.

    ``jacobian`` maps points to ``(..., n, n)`` arrays with
    ``J[i, j] = d v^i / d x^j``; omitted means centered finite differences.
    """

    def __init__(self, dim: int, func: Callable, jacobian: Optional[Callable] = None,
                 fd_step: float = FD_STEP, name: str = "vector field"):
        self.dim = int(dim)
        self._func = func
        self._jacobian = jacobian
        self.fd_step = float(fd_step)
        self.name = name

    def __call__(self, x):
        x = _as_points(x, self.dim)
        v = np.asarray(self._func(x), dtype=float)
        if v.shape != x.shape:
            raise DimensionMismatchError(
                f"vector callback returned shape {v.shape} for points {x.shape}"
            )
        return v

    def jacobian(self, x):
        x = _as_points(x, self.dim)
        if self._jacobian is not None:
            J = np.asarray(self._jacobian(x), dtype=float)
            want = x.shape[:-1] + (self.dim, self.dim)
            if J.shape != want:
                raise DimensionMismatchError(
                    f"jacobian callback returned {J.shape}, expected {want}"
                )
            return J
        n = self.dim
        h = _fd_scale(x, self.fd_step)
        J = np.empty(x.shape[:-1] + (n, n))
        for k in range(n):
            dx = np.zeros_like(x)
            dx[..., k] = h
            J[..., :, k] = (self(x + dx) - self(x - dx)) / (2.0 * h)[..., None]
        return J

    def __repr__(self):
        return f"VectorField(dim={self.dim}, name={self.name!r})"


class TensorAtPoint:
    """Components of a tensor of rank <= 2 at a single point.

    ``variance`` is a tuple of ``"up"`` / ``"down"`` flags, one per index.
    """

    __slots__ = ("components", "variance")

    def __init__(self, components, variance: Sequence[str]):
        components = np.asarray(components, dtype=float)
        variance = tuple(variance)
        if components.ndim != len(variance):
            raise DimensionMismatchError(
                f"rank {components.ndim} components with {len(variance)} variance flags"
            )
        if components.ndim > 2:
            raise DimensionMismatchError("tensors of rank > 2 are not supported")
        if any(f not in ("up", "down") for f in variance):
            raise ValueError("variance flags must be 'up' or 'down'")
        if components.ndim == 2 and components.shape[0] != components.shape[1]:
            raise DimensionMismatchError("rank-2 components must be square")
        self.components = components
        self.variance = variance

    @property
    def rank(self):
        return self.components.ndim

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        if self.rank != 2:
            return False
        c = self.components
        return bool(np.max(np.abs(c - c.T), initial=0.0) <= tol * max(1.0, np.max(np.abs(c))))

    def __repr__(self):
        return f"TensorAtPoint(variance={self.variance}, components=\n{self.components})"


def euclidean_metric(dim: int = 2) -> MetricField:
    """The flat metric ``delta_ij`` in Cartesian coordinates."""
    eye = np.eye(dim)

    def matrix(x):
        return np.broadcast_to(eye, x.shape[:-1] + (dim, dim)).copy()

    def deriv(x):
        return np.zeros(x.shape[:-1] + (dim,) * 3)

    return MetricField(dim, matrix, deriv, name="euclidean")


def conformal_metric(phi: Callable, grad_phi: Optional[Callable] = None,
                     dim: int = 2) -> MetricField:
    """Conformally flat metric ``g_ij = exp(2 phi(x)) delta_ij``.

    Parameters
    ----------
    phi : callable
        Scalar conformal factor, vectorized over points ``(..., n) -> (...)``.
    grad_phi : callable, optional
        Gradient ``(..., n) -> (..., n)``.  Omitted: finite differences on
        the assembled matrix.
    """
    eye = np.eye(dim)

    def matrix(x):
        f = np.exp(2.0 * np.asarray(phi(x), dtype=float))
        return f[..., None, None] * eye

    deriv = None
    if grad_phi is not None:
        def deriv(x):
            f = np.exp(2.0 * np.asarray(phi(x), dtype=float))
            gp = np.asarray(grad_phi(x), dtype=float)
            # d_k g_ij = 2 phi_k exp(2 phi) delta_ij
            return 2.0 * gp[..., :, None, None] * f[..., None, None, None] * eye

    return MetricField(dim, matrix, deriv, name="conformal")


def _cholesky(g):
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        # locate the offending point for the error message
        gm = g.reshape((-1,) + g.shape[-2:])
        for idx in range(gm.shape[0]):
            try:
                np.linalg.cholesky(gm[idx])
            except np.linalg.LinAlgError:
                raise DegenerateMetricError(
                    f"metric not positive definite (batch entry {idx}):\n{gm[idx]}"
                ) from None
        raise DegenerateMetricError("metric not positive definite") from None


def christoffel(metric: MetricField, x):
    """Christoffel symbols ``Gamma^k_ij`` of the Levi-Civita connection.

    Uses ``Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)`` and
    returns the result explicitly symmetrized in the lower index pair.
    """
    ginv = metric.inverse(x)
    dg = metric.derivative(x)
    # S[..., i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    S = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
    gamma = 0.5 * np.einsum("...kl,...ijl->...kij", ginv, S)
    return 0.5 * (gamma + np.swapaxes(gamma, -2, -1))


def raise_index(metric: MetricField, x, alpha):
    """Raise the index of a covector: ``alpha^i = g^{ij} alpha_j``."""
    wrapped = isinstance(alpha, TensorAtPoint)
    if wrapped:
        if alpha.variance != ("down",):
            raise DimensionMismatchError("raise_index expects a rank-1 'down' tensor")
        comps = alpha.components
    else:
        comps = np.asarray(alpha, dtype=float)
    if comps.shape[-1] != metric.dim:
        raise DimensionMismatchError(
            f"covector of dimension {comps.shape[-1]} against metric of dim {metric.dim}"
        )
    g = metric(x)
    _cholesky(g)
    out = np.linalg.solve(g, comps[..., None])[..., 0]
    return TensorAtPoint(out, ("up",)) if wrapped else out


def lower_index(metric: MetricField, x, v):
    """Lower the index of a vector: ``v_i = g_ij v^j``."""
    wrapped = isinstance(v, TensorAtPoint)
    if wrapped:
        if v.variance != ("up",):
            raise DimensionMismatchError("lower_index expects a rank-1 'up' tensor")
        comps = v.components
    else:
        comps = np.asarray(v, dtype=float)
    if comps.shape[-1] != metric.dim:
        raise DimensionMismatchError(
            f"vector of dimension {comps.shape[-1]} against metric of dim {metric.dim}"
        )
    out = np.einsum("...ij,...j->...i", metric(x), comps)
    return TensorAtPoint(out, ("down",)) if wrapped else out


def covariant_derivative_vector(metric: MetricField, v: VectorField, x):
    """Covariant derivative ``M[i, j] = v^i_{;j} = d_j v^i + Gamma^i_jk v^k``."""
    J = v.jacobian(x)
    gamma = christoffel(metric, x)
    return J + np.einsum("...ijk,...k->...ij", gamma, v(x))


def strain_tensor(metric: MetricField, v: VectorField, x):
    """Deformation (strain) tensor ``D_ij = (v_{i;j} + v_{j;i}) / 2``.

    Equals half the Lie derivative of the metric along ``v``; vanishes
    identically when ``v`` is a Killing field.  Output is exactly symmetric.
    """
    M = covariant_derivative_vector(metric, v, x)
    low = np.einsum("...ik,...kj->...ij", metric(x), M)  # v_{i;j}
    return 0.5 * (low + np.swapaxes(low, -2, -1))


def divergence(metric: MetricField, v: VectorField, x):
    """Covariant divergence ``v^j_{;j}``."""
    M = covariant_derivative_vector(metric, v, x)
    return np.einsum("...ii->...", M)


def volume_density(metric: MetricField, x):
    """Riemannian volume density ``sqrt(det g)``."""
    L = _cholesky(metric(x))
    diag = np.diagonal(L, axis1=-2, axis2=-1)
    return np.prod(diag, axis=-1)


def trace_tensor(metric: MetricField, x, T):
    """Metric trace ``g^{ij} T_ij`` of a covariant rank-2 tensor."""
    if isinstance(T, TensorAtPoint):
        if T.variance != ("down", "down"):
            raise DimensionMismatchError("trace_tensor expects a ('down','down') tensor")
        comps = T.components
    else:
        comps = np.asarray(T, dtype=float)
    if comps.shape[-2:] != (metric.dim, metric.dim):
        raise DimensionMismatchError(
            f"tensor block {comps.shape[-2:]} against metric of dim {metric.dim}"
        )
    return np.einsum("...ij,...ij->...", metric.inverse(x), comps)
