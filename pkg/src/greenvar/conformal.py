"""Planar domains as conformal polynomial images of the unit disk.

A domain is ``Omega = f(D)`` where ``f(z) = c_1 z + ... + c_K z^K`` is
injective on the closed disk with ``f(0) = 0``.  A one-parameter family
``f_t = f + t h`` (``h`` another polynomial with ``h(0) = 0``) moves the
domain; its velocity field at ``t = 0`` is ``v(x) = h(f^{-1}(x))``.

Points are real pairs ``(x^1, x^2)``; internally everything is complex
arithmetic with ``x = x^1 + i x^2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    InjectivityError,
    MapInversionError,
)
from .tensors import VectorField

__all__ = [
    "ConformalMap",
    "DomainFamily",
    "BoundaryGrid",
    "boundary_grid",
    "normal_speed",
    "enclosed_area",
    "to_complex",
    "to_points",
    "dilation_family",
    "rotation_family",
    "quadratic_bump_family",
    "cubic_mix_family",
    "BUILTIN_FAMILIES",
]

# Injectivity gate resolution: |f'| is checked on a 720-node boundary grid
# and a 50 x 72 interior polar grid; the gate fails if min |f'| <= GATE_FLOOR.
GATE_BOUNDARY_NODES = 720
GATE_RADIAL = 50
GATE_ANGULAR = 72
GATE_FLOOR = 1e-9

NEWTON_MAXITER = 50
NEWTON_TOL = 1e-14
SCAN_FALLBACK_ANGLES = 72

# Families constructed without an explicit t_max scan |t| up to this cap.
T_SCAN_CAP = 4.0
T_SCAN_STEPS = 64


def to_complex(points):
    """Pack real points ``(..., 2)`` into complex numbers."""
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 2:
        raise DomainError(f"expected planar points, got shape {p.shape}")
    return p[..., 0] + 1j * p[..., 1]


def to_points(z):
    """Unpack complex numbers into real points ``(..., 2)``."""
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1)


def _as_coeffs(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if c.ndim != 1 or c.size == 0:
        raise ConfigError("coefficient list must be a non-empty 1-d sequence")
    return c


class ConformalMap:
    """Polynomial map ``f(z) = c_1 z + ... + c_K z^K`` of the unit disk.

    ``coeffs[k]`` is ``c_{k+1}``; the constant term is absent so ``f(0) = 0``.
    Construction runs the injectivity gate (``c_1 != 0`` and ``|f'| > 0`` on
    the fixed boundary/interior check grids) unless ``check=False``.
    """

    def __init__(self, coeffs, check: bool = True):
        self.coeffs = _as_coeffs(coeffs)
        # derivative coefficients of f'(z) = c_1 + 2 c_2 z + ...
        k = np.arange(1, self.coeffs.size + 1)
        self._dcoeffs = self.coeffs * k
        self._ddcoeffs = (self.coeffs * k * (k - 1))[1:]
        if check:
            if self.coeffs[0] == 0:
                raise InjectivityError("leading coefficient c_1 must be nonzero")
            m = self.gate_min_derivative()
            if m <= GATE_FLOOR:
                raise InjectivityError(
                    f"injectivity gate failed: min |f'| = {m:.3e} on check grids"
                )

    @classmethod
    def identity(cls) -> "ConformalMap":
        return cls([1.0 + 0.0j], check=False)

    @property
    def degree(self) -> int:
        return self.coeffs.size

    @property
    def is_identity(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 1.0 + 0.0j

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        # Horner on f(z)/z, then restore the factor of z.
        acc = np.full_like(z, self.coeffs[-1])
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc * z

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.full_like(z, self._dcoeffs[-1])
        for c in self._dcoeffs[-2::-1]:
            acc = acc * z + c
        return acc

    def second_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self._ddcoeffs.size == 0:
            return np.zeros_like(z)
        acc = np.full_like(z, self._ddcoeffs[-1])
        for c in self._ddcoeffs[-2::-1]:
            acc = acc * z + c
        return acc

    def gate_min_derivative(self) -> float:
        """Min of ``|f'|`` over the boundary and interior check grids."""
        th = np.linspace(0.0, 2.0 * np.pi, GATE_BOUNDARY_NODES, endpoint=False)
        ring = np.exp(1j * th)
        r = (np.arange(GATE_RADIAL) + 0.5) / GATE_RADIAL
        phi = np.linspace(0.0, 2.0 * np.pi, GATE_ANGULAR, endpoint=False)
        grid = r[:, None] * np.exp(1j * phi[None, :])
        m = min(np.min(np.abs(self.derivative(ring))),
                np.min(np.abs(self.derivative(grid))))
        return float(m)

    def passes_gate(self) -> bool:
        return self.coeffs[0] != 0 and self.gate_min_derivative() > GATE_FLOOR

    def inverse(self, x, max_modulus: float = 1.0 + 1e-9):
        """Preimage ``z = f^{-1}(x)`` for ``x`` in the image of the closed disk.

        Newton iteration from ``z_0 = x / c_1`` capped at 50 steps, falling
        back to a 72-point argument scan of starting guesses.  Raises
        :class:`MapInversionError` if no start converges and
        :class:`DomainError` when the preimage lies outside the closed disk
        (modulus above ``max_modulus``).
        """
        x = np.asarray(x, dtype=complex)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x).astype(complex).ravel()
        if self.is_identity:
            z = xf.copy()
        else:
            z = self._newton(xf, xf / self.coeffs[0])
            bad = np.flatnonzero(~np.isfinite(z))
            for idx in bad:
                z[idx] = self._scan_start(xf[idx])
        out = z.reshape(x.shape)
        if np.any(np.abs(out) > max_modulus):
            worst = np.max(np.abs(out))
            raise DomainError(
                f"point outside the mapped disk: preimage modulus {worst:.6g}"
            )
        return out[()] if scalar else out

    def _newton(self, x, z0):
        z = z0.astype(complex).copy()
        active = np.ones(z.shape, dtype=bool)
        scale = np.maximum(1.0, np.abs(x))
        for _ in range(NEWTON_MAXITER):
            res = self(z[active]) - x[active]
            done = np.abs(res) <= NEWTON_TOL * scale[active]
            if np.all(done):
                active[active] = False
                break
            d = self.derivative(z[active])
            # stalled derivative: nudge off the critical point
            d = np.where(np.abs(d) < 1e-30, 1e-30, d)
            step = np.where(done, 0.0, res / d)
            z[active] -= step
            still = active.copy()
            still[active] = ~done
            active = still
            if not np.any(active):
                break
        z[active] = np.nan  # unconverged
        return z

    def _scan_start(self, xi):
        r = float(np.clip(np.abs(xi / self.coeffs[0]), 0.05, 0.98))
        for k in range(SCAN_FALLBACK_ANGLES):
            th = 2.0 * np.pi * k / SCAN_FALLBACK_ANGLES
            z = self._newton(np.array([xi]), np.array([r * np.exp(1j * th)]))[0]
            if np.isfinite(z):
                return z
        raise MapInversionError(
            f"Newton failed for x = {xi:.6g} after argument scan"
        )

    def contains(self, x, tol: float = 1e-9) -> bool:
        """Whether the point lies in the closed image ``f(cl D)``."""
        try:
            z = self.inverse(np.asarray(x, dtype=complex), max_modulus=np.inf)
        except MapInversionError:
            return False
        return bool(np.all(np.abs(z) <= 1.0 + tol))

    def __repr__(self):
        return f"ConformalMap({np.array2string(self.coeffs, precision=4)})"


def _pad_sum(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    n = max(a.size, b.size)
    out = np.zeros(n, dtype=complex)
    out[: a.size] += a
    out[: b.size] += t * b
    return out


class DomainFamily:
    """One-parameter family ``Omega(t) = (base + t * perturbation)(D)``.

    ``t_max`` bounds the admissible parameter range.  When omitted it is set
    to half the smallest ``|t|`` at which the injectivity gate first fails on
    a coarse scan (cap ``T_SCAN_CAP`` when the gate never fails).
    """

    def __init__(self, base, perturbation, t_max: Optional[float] = None):
        self.base = base if isinstance(base, ConformalMap) else ConformalMap(base)
        self.perturbation = _as_coeffs(perturbation)
        if t_max is None:
            t_max = self._scan_t_max()
        if (not isinstance(t_max, (int, float)) or isinstance(t_max, bool)
                or not (t_max > 0 and np.isfinite(t_max))):
            raise ConfigError(f"t_max must be positive and finite, got {t_max!r}")
        self.t_max = float(t_max)
        self._check_range()

    def _gate_ok(self, t: float) -> bool:
        m = ConformalMap(_pad_sum(self.base.coeffs, self.perturbation, t), check=False)
        return m.coeffs[0] != 0 and m.gate_min_derivative() > GATE_FLOOR

    def _scan_t_max(self) -> float:
        for k in range(1, T_SCAN_STEPS + 1):
            t = T_SCAN_CAP * k / T_SCAN_STEPS
            if not (self._gate_ok(t) and self._gate_ok(-t)):
                return 0.5 * t
        return 0.5 * T_SCAN_CAP

    def _check_range(self):
        for t in np.linspace(-self.t_max, self.t_max, 17):
            if not self._gate_ok(float(t)):
                raise InjectivityError(
                    f"injectivity gate fails inside |t| <= {self.t_max} (at t = {t:.6g})"
                )

    def map_at(self, t: float) -> ConformalMap:
        if abs(t) > self.t_max * (1.0 + 1e-12):
            raise DomainError(f"|t| = {abs(t):.6g} exceeds t_max = {self.t_max:.6g}")
        return ConformalMap(_pad_sum(self.base.coeffs, self.perturbation, float(t)),
                            check=False)

    def velocity_field(self) -> VectorField:
        """Deformation velocity on ``Omega(0)`` with analytic Jacobian.

        ``v(x) = h(f^{-1}(x))`` packed as a real vector field; the Jacobian
        comes from the complex derivative ``h'(z) / f'(z)`` (Cauchy-Riemann
        structure), so no finite differencing is involved.
        """
        base = self.base
        pert = ConformalMap(self.perturbation, check=False)

        def func(x):
            z = base.inverse(to_complex(x))
            return to_points(pert(z))

        def jac(x):
            z = base.inverse(to_complex(x))
            w = pert.derivative(z) / base.derivative(z)
            J = np.empty(np.shape(z) + (2, 2))
            J[..., 0, 0] = w.real
            J[..., 0, 1] = -w.imag
            J[..., 1, 0] = w.imag
            J[..., 1, 1] = w.real
            return J

        return VectorField(2, func, jac, name="family velocity")

    def to_json(self) -> dict:
        pack = lambda c: [[float(v.real), float(v.imag)] for v in c]
        return {
            "base": pack(self.base.coeffs),
            "perturbation": pack(self.perturbation),
            "t_max": self.t_max,
        }

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "DomainFamily":
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"family JSON is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("family spec must be a JSON object")
        unknown = set(obj) - {"base", "perturbation", "t_max"}
        if unknown:
            raise ConfigError(f"unknown family fields: {sorted(unknown)}")
        missing = {"base", "perturbation"} - set(obj)
        if missing:
            raise ConfigError(f"family spec missing fields: {sorted(missing)}")
        return cls(
            _unpack_coeffs(obj["base"], "base"),
            _unpack_coeffs(obj["perturbation"], "perturbation"),
            t_max=obj.get("t_max"),
        )

    def __repr__(self):
        return (f"DomainFamily(base={self.base!r}, "
                f"perturbation={np.array2string(self.perturbation, precision=4)}, "
                f"t_max={self.t_max:g})")


def _unpack_coeffs(raw, field: str) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"family field '{field}' must be a non-empty list")
    out = np.empty(len(raw), dtype=complex)
    for k, pair in enumerate(raw):
        if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                or not all(isinstance(v, (int, float)) for v in pair)):
            raise ConfigError(
                f"family field '{field}' entry {k} must be a [re, im] pair"
            )
        out[k] = complex(pair[0], pair[1])
    return out


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Trapezoidal boundary rule on ``d Omega(t)``.

    ``nodes`` are the boundary points, ``normals`` the outward unit normals,
    ``weights`` the arclength weights ``|gamma'(theta)| * 2 pi / M``, and
    ``params`` the unit-circle parameters ``exp(i theta_m)``.
    """

    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    params: np.ndarray
    map: ConformalMap


def boundary_grid(family, t: float = 0.0, m: int = 256) -> BoundaryGrid:
    """Build the M-node periodic trapezoid rule on the family boundary."""
    if m < 4:
        raise ConfigError(f"boundary grid needs at least 4 nodes, got {m}")
    fmap = family.map_at(t) if isinstance(family, DomainFamily) else family
    th = 2.0 * np.pi * np.arange(m) / m
    e = np.exp(1j * th)
    fp = fmap.derivative(e)
    speed = np.abs(fp)
    if np.any(speed <= GATE_FLOOR):
        raise InjectivityError("boundary parametrization degenerate: |f'| ~ 0")
    # tangent is i e f'; outward normal is the tangent rotated by -90 degrees
    normal = e * fp / speed
    return BoundaryGrid(
        nodes=to_points(fmap(e)),
        normals=to_points(normal),
        weights=speed * (2.0 * np.pi / m),
        params=e,
        map=fmap,
    )


def normal_speed(grid: BoundaryGrid, v: VectorField) -> np.ndarray:
    """Normal velocity ``delta n = v(x_m) . n_m`` at the grid nodes."""
    return np.einsum("mi,mi->m", v(grid.nodes), grid.normals)


def enclosed_area(grid: BoundaryGrid) -> float:
    """Area of the domain from the boundary rule, via div(x) = 2."""
    return 0.5 * float(np.dot(np.einsum("mi,mi->m", grid.nodes, grid.normals),
                              grid.weights))


def dilation_family() -> DomainFamily:
    """Uniform dilation: h(z) = z, velocity v(x) = x."""
    return DomainFamily([1.0], [1.0], t_max=0.5)


def rotation_family() -> DomainFamily:
    """Rigid rotation at t = 0: h(z) = i z, velocity v(x) = i x (Killing)."""
    return DomainFamily([1.0], [1.0j], t_max=1.0)


def quadratic_bump_family() -> DomainFamily:
    """Quadratic boundary bump: h(z) = 0.1 z^2."""
    return DomainFamily([1.0], [0.0, 0.1], t_max=2.0)


def cubic_mix_family() -> DomainFamily:
    """Mixed perturbation h(z) = 0.05 z^2 + 0.03 z^3."""
    return DomainFamily([1.0], [0.0, 0.05, 0.03], t_max=2.5)


BUILTIN_FAMILIES = {
    "dilation": dilation_family,
    "rotation": rotation_family,
    "quadratic_bump": quadratic_bump_family,
    "cubic_mix": cubic_mix_family,
}
