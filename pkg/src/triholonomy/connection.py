"""Gauge data over the shape sphere: U(1) and SU(2) connection evaluation.

The abelian (Guichardet) part is the potential of a unit monopole on the
shape sphere, written in one of the two standard patches:

    north:  A = (1/2) (1 - cos theta) d phi      (string at the south pole)
    south:  A = -(1/2) (1 + cos theta) d phi     (string at the north pole)

The full SU(2) connection couples a Bloch-axis field ``n`` and a complex
control ``psi``.  For a moving (analytic) axis the lab-frame one-form is

    A_full = [A n + dn x n + Re(psi) dn + Im(psi) dn x n] . sigma / 2i,

while for a *pinned* axis (constant ``n``, the regime of the explicit gate
constructions) the control couples directly through a fixed right-handed
transverse frame (e1, e2, n):

    A_full = [A n + Re(psi) e1 - Im(psi) e2] . sigma / 2i,

which in the frame basis is the matrix (1/2i) [[A, psi], [conj(psi), -A]].
This is the standard rescaled-control convention in which ``psi`` is the
transverse connection component per unit loop parameter; it makes (A, psi)
an abelian-Higgs pair under frame rotations about n,

    A -> A + d alpha,   psi -> e^{i q alpha} psi,

exactly (the stated unit-charge law at transport weight q = 1).

A ``ConnectionSample`` additionally reports the abelian coefficient
``C = A + omega`` and the transverse coefficient ``J`` (``psi`` itself for
pinned fields, ``psi (d mu - i sin mu d lambda)`` for analytic ones), with
``omega`` the unit-monopole potential on the Bloch sphere pulled back
through the axis field.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalError, ValidationError
from .shapespace import ShapePoint

__all__ = [
    "GaugePatch",
    "BlochField",
    "ControlField",
    "ConnectionSample",
    "guichardet_connection",
    "bloch_axis",
    "bloch_area_potential",
    "wilczek_zee_sample",
    "curvature_sample",
    "curvature_vector",
]

_FD_STEP = 1e-6  # central-difference step for angle partials
_PAULI = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


class GaugePatch(enum.Enum):
    """Monopole gauge patch: which pole carries the Dirac string."""

    NORTH = "north"  # regular at theta = 0, excluded pole at theta = pi
    SOUTH = "south"  # regular at theta = pi, excluded pole at theta = 0


def vector_to_su2(v) -> np.ndarray:
    """Embed a real 3-vector as v . sigma / 2i (anti-Hermitian traceless)."""
    vx, vy, vz = v
    return (vx * _PAULI[0] + vy * _PAULI[1] + vz * _PAULI[2]) / 2j


class BlochField:
    """Quantisation-axis field over the shape sphere.

    Either *pinned* (a constant unit vector, default +z) or *analytic*,
    given by Bloch-sphere angle callables ``mu(theta, phi)`` (polar) and
    ``lam(theta, phi)`` (azimuthal), so that

        n = (cos lam sin mu, sin lam sin mu, cos mu).

    Angle partial derivatives default to central differences; analytic
    partials can be supplied for exactness.
    """

    def __init__(
        self,
        mu: Callable[[float, float], float] | None = None,
        lam: Callable[[float, float], float] | None = None,
        axis=None,
        mu_partials: Callable[[float, float], tuple[float, float]] | None = None,
        lam_partials: Callable[[float, float], tuple[float, float]] | None = None,
    ):
        if (mu is None) != (lam is None):
            raise ValidationError("analytic fields need both mu and lam callables")
        self._mu = mu
        self._lam = lam
        self._mu_partials = mu_partials
        self._lam_partials = lam_partials
        if mu is None:
            n = np.array([0.0, 0.0, 1.0]) if axis is None else np.asarray(axis, dtype=float)
            norm = np.linalg.norm(n)
            if not np.isfinite(norm) or abs(norm - 1.0) > 1e-12:
                raise ValidationError("pinned axis must be a unit vector to 1e-12")
            self._axis = n
            self._frame = self._transverse_frame(n)
        else:
            if axis is not None:
                raise ValidationError("give either a pinned axis or angle callables, not both")
            self._axis = None
            self._frame = None

    @staticmethod
    def _transverse_frame(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic right-handed completion (e1, e2) of a unit vector."""
        trial = np.array([0.0, 0.0, 1.0])
        if abs(np.dot(trial, n)) > 0.9:
            trial = np.array([1.0, 0.0, 0.0])
        e1 = np.cross(trial, n)
        e1 /= np.linalg.norm(e1)
        # For the default +z axis this yields e1 = x, e2 = y.
        if n[2] > 0.9:
            e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.cross(n, e1)
        return e1, e2

    @classmethod
    def pinned(cls, axis=None) -> "BlochField":
        return cls(axis=axis)

    @classmethod
    def from_angles(cls, mu, lam, mu_partials=None, lam_partials=None) -> "BlochField":
        return cls(mu=mu, lam=lam, mu_partials=mu_partials, lam_partials=lam_partials)

    @classmethod
    def radial(cls) -> "BlochField":
        """The identity field: the axis follows the shape-sphere radial direction."""
        return cls.from_angles(
            mu=lambda th, ph: th,
            lam=lambda th, ph: ph,
            mu_partials=lambda th, ph: (1.0, 0.0),
            lam_partials=lambda th, ph: (0.0, 1.0),
        )

    @property
    def is_pinned(self) -> bool:
        return self._mu is None

    @property
    def pinned_axis(self) -> np.ndarray:
        if not self.is_pinned:
            raise ValidationError("not a pinned field")
        return self._axis

    @property
    def transverse_frame(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.is_pinned:
            raise ValidationError("not a pinned field")
        return self._frame

    def angles(self, point: ShapePoint) -> tuple[float, float]:
        """Bloch angles (mu, lam) at a shape point."""
        if self.is_pinned:
            n = self._axis
            return math.acos(np.clip(n[2], -1.0, 1.0)), math.atan2(n[1], n[0])
        return (
            float(self._mu(point.colatitude, point.azimuth)),
            float(self._lam(point.colatitude, point.azimuth)),
        )

    def angle_partials(self, point: ShapePoint) -> tuple[tuple[float, float], tuple[float, float]]:
        """((dmu/dtheta, dmu/dphi), (dlam/dtheta, dlam/dphi)) at a point."""
        if self.is_pinned:
            return (0.0, 0.0), (0.0, 0.0)
        th, ph = point.colatitude, point.azimuth
        out = []
        for fn, supplied in ((self._mu, self._mu_partials), (self._lam, self._lam_partials)):
            if supplied is not None:
                out.append(tuple(float(x) for x in supplied(th, ph)))
            else:
                h = _FD_STEP
                out.append(
                    (
                        (fn(th + h, ph) - fn(th - h, ph)) / (2 * h),
                        (fn(th, ph + h) - fn(th, ph - h)) / (2 * h),
                    )
                )
        return out[0], out[1]

    def angle_rates(self, point: ShapePoint, tangent) -> tuple[float, float]:
        """(d mu/ds, d lam/ds) along a shape-space tangent (dtheta/ds, dphi/ds)."""
        (dmu_dth, dmu_dph), (dlam_dth, dlam_dph) = self.angle_partials(point)
        dth, dph = tangent
        return dmu_dth * dth + dmu_dph * dph, dlam_dth * dth + dlam_dph * dph

    def axis(self, point: ShapePoint) -> np.ndarray:
        """The unit axis n at a shape point."""
        if self.is_pinned:
            return self._axis
        mu, lam = self.angles(point)
        n = np.array([math.cos(lam) * math.sin(mu), math.sin(lam) * math.sin(mu), math.cos(mu)])
        norm = np.linalg.norm(n)
        if abs(norm - 1.0) > 1e-12:
            raise NumericalError("Bloch field produced a non-unit axis")
        return n


def bloch_axis(field: BlochField, point: ShapePoint, tangent) -> tuple[np.ndarray, np.ndarray]:
    """Axis n and its parameter derivative dn/ds along a tangent.

    The derivative is assembled from the exact angle gradients of the unit
    sphere, so it is orthogonal to n at machine precision even when the
    angle rates come from finite differences.
    """
    n = field.axis(point)
    if field.is_pinned:
        return n, np.zeros(3)
    mu, lam = field.angles(point)
    dmu, dlam = field.angle_rates(point, tangent)
    dn_dmu = np.array([math.cos(lam) * math.cos(mu), math.sin(lam) * math.cos(mu), -math.sin(mu)])
    dn_dlam = np.array([-math.sin(lam) * math.sin(mu), math.cos(lam) * math.sin(mu), 0.0])
    return n, dmu * dn_dmu + dlam * dn_dlam


class ControlField:
    """Complex control psi as a function of the loop parameter s in [0, 2 pi].

    Values must be finite; periodic continuity |psi(0) - psi(2 pi)| < 1e-10
    is enforced unless the field is constructed with ``check_periodic=False``
    (needed for phase-steered controls whose argument tracks an accumulated
    frame angle and therefore winds).
    """

    def __init__(self, fn: Callable[[float], complex], check_periodic: bool = True):
        self._fn = fn
        self.periodic = True
        v0, v1 = complex(fn(0.0)), complex(fn(2 * math.pi))
        if not (np.isfinite(v0.real) and np.isfinite(v0.imag)):
            raise ValidationError("control field value is not finite")
        if abs(v0 - v1) > 1e-10:
            if check_periodic:
                raise ValidationError(
                    f"control field is not 2 pi-periodic (gap {abs(v0 - v1):.3e})"
                )
            self.periodic = False

    @classmethod
    def constant(cls, value: complex) -> "ControlField":
        value = complex(value)
        return cls(lambda s: value)

    @classmethod
    def zero(cls) -> "ControlField":
        return cls.constant(0.0)

    @classmethod
    def from_samples(cls, values, check_periodic: bool = True) -> "ControlField":
        """Piecewise-linear interpolation of uniform samples over [0, 2 pi]."""
        vals = np.asarray(values, dtype=complex)
        grid = np.linspace(0.0, 2 * math.pi, vals.size)

        def fn(s):
            return complex(
                np.interp(s, grid, vals.real) + 1j * np.interp(s, grid, vals.imag)
            )

        return cls(fn, check_periodic=check_periodic)

    def at(self, s) -> complex | np.ndarray:
        s_arr = np.asarray(s, dtype=float)
        if s_arr.ndim == 0:
            return complex(self._fn(float(s_arr)))
        return np.array([complex(self._fn(float(si))) for si in s_arr])


@dataclass(frozen=True)
class ConnectionSample:
    """SU(2) connection contracted with a loop tangent, plus its decomposition.

    Attributes:
        full: 2x2 anti-Hermitian traceless matrix (connection per unit s).
        abelian: the diagonal coefficient C = A + omega on the tangent.
        transverse: the off-diagonal coefficient J on the tangent.
    """

    full: np.ndarray
    abelian: float
    transverse: complex

    def __post_init__(self):
        m = np.asarray(self.full, dtype=complex)
        if m.shape != (2, 2):
            raise ValidationError("connection sample must be 2x2")
        if abs(np.trace(m)) > 1e-12 or np.max(np.abs(m + m.conj().T)) > 1e-12:
            raise ValidationError("connection sample must be traceless and anti-Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "full", m)


def guichardet_connection(point: ShapePoint, tangent, patch: GaugePatch = GaugePatch.NORTH) -> float:
    """Contraction of the shape-sphere monopole potential with a tangent.

    Raises:
        NumericalError: when evaluated at the patch's excluded pole.
    """
    th = point.colatitude
    _, dph = tangent
    if patch is GaugePatch.NORTH:
        if th > math.pi - 1e-9:
            raise NumericalError("north-patch potential evaluated at its excluded (south) pole")
        return 0.5 * (1.0 - math.cos(th)) * dph
    if th < 1e-9:
        raise NumericalError("south-patch potential evaluated at its excluded (north) pole")
    return -0.5 * (1.0 + math.cos(th)) * dph


def bloch_area_potential(
    field: BlochField,
    point: ShapePoint,
    tangent,
    bloch_patch: GaugePatch = GaugePatch.NORTH,
) -> float:
    """Contraction of omega, the unit-monopole potential on the Bloch sphere.

    omega = (1/2)(1 - cos mu) d lambda in the north Bloch patch (the south
    analog when the axis visits the neighbourhood of mu = pi), pulled back
    through the axis field.  Pinned fields give exactly zero.
    """
    if field.is_pinned:
        return 0.0
    mu, _ = field.angles(point)
    _, dlam = field.angle_rates(point, tangent)
    if bloch_patch is GaugePatch.NORTH:
        if mu > math.pi - 1e-9:
            raise NumericalError("Bloch axis crosses the excluded pole of the north Bloch patch")
        return 0.5 * (1.0 - math.cos(mu)) * dlam
    if mu < 1e-9:
        raise NumericalError("Bloch axis crosses the excluded pole of the south Bloch patch")
    return -0.5 * (1.0 + math.cos(mu)) * dlam


def connection_vector(
    point: ShapePoint,
    tangent,
    field: BlochField,
    psi: complex,
    patch: GaugePatch = GaugePatch.NORTH,
) -> np.ndarray:
    """Real 3-vector V such that the full connection sample is V . sigma / 2i."""
    a = guichardet_connection(point, tangent, patch)
    if field.is_pinned:
        n = field.pinned_axis
        e1, e2 = field.transverse_frame
        return a * n + psi.real * e1 - psi.imag * e2
    n, dn = bloch_axis(field, point, tangent)
    dn_cross_n = np.cross(dn, n)
    return a * n + dn_cross_n + psi.real * dn + psi.imag * dn_cross_n


def wilczek_zee_sample(
    point: ShapePoint,
    tangent,
    field: BlochField,
    psi: complex,
    patch: GaugePatch = GaugePatch.NORTH,
    bloch_patch: GaugePatch = GaugePatch.NORTH,
) -> ConnectionSample:
    """Full SU(2) connection on a tangent with its abelian/transverse split."""
    psi = complex(psi)
    if not (np.isfinite(psi.real) and np.isfinite(psi.imag)):
        raise ValidationError("control value must be finite")
    v = connection_vector(point, tangent, field, psi, patch)
    a = guichardet_connection(point, tangent, patch)
    omega = bloch_area_potential(field, point, tangent, bloch_patch)
    if field.is_pinned:
        transverse = psi
    else:
        mu, _ = field.angles(point)
        dmu, dlam = field.angle_rates(point, tangent)
        transverse = psi * (dmu - 1j * math.sin(mu) * dlam)
    return ConnectionSample(vector_to_su2(v), a + omega, transverse)


def section_frame(mu: float, lam: float) -> np.ndarray:
    """SU(2) frame whose columns are the axis eigenvectors, north-regular section.

    Columns: (cos(mu/2), e^{i lam} sin(mu/2)) and (-e^{-i lam} sin(mu/2),
    cos(mu/2)).  Single-valued in lam; ill-defined at mu = pi.
    """
    c, s = math.cos(0.5 * mu), math.sin(0.5 * mu)
    phase = complex(math.cos(lam), math.sin(lam))
    return np.array([[c, -s / phase], [s * phase, c]], dtype=complex)


def section_frame_derivative(mu: float, lam: float, dmu: float, dlam: float) -> np.ndarray:
    """Parameter derivative of :func:`section_frame` along (dmu/ds, dlam/ds)."""
    c, s = math.cos(0.5 * mu), math.sin(0.5 * mu)
    phase = complex(math.cos(lam), math.sin(lam))
    dc, dsn = -0.5 * s * dmu, 0.5 * c * dmu
    return np.array(
        [
            [dc, (-dsn + 1j * s * dlam) / phase],
            [(dsn + 1j * s * dlam) * phase, dc],
        ],
        dtype=complex,
    )


def eigenframe_rates(
    point: ShapePoint,
    tangent,
    field: BlochField,
    psi: complex,
    q: float,
    patch: GaugePatch = GaugePatch.NORTH,
) -> tuple[float, complex]:
    """Exact eigenframe transport rates (c, j) along a tangent.

    The transported state in the instantaneous eigenframe of the axis obeys
    dV/ds = (i/2) [[c, j], [conj(j), -c]] V.  For a pinned field c = q A and
    j = q psi; for an analytic field the basis change contributes the Bloch
    monopole term to the diagonal and a geometric piece to the transverse
    coupling:

        c = q A - 2 omega,
        j = w (q psi + i (q - 1)),   w = e^{-i lam} (dmu - i sin mu dlam).

    These are the rates the trace expansion integrates; they agree with the
    reported (C, J) decomposition exactly in the pinned regime.
    """
    a = guichardet_connection(point, tangent, patch)
    if field.is_pinned:
        return q * a, q * complex(psi)
    omega = bloch_area_potential(field, point, tangent)
    mu, lam = field.angles(point)
    dmu, dlam = field.angle_rates(point, tangent)
    w = complex(math.cos(lam), -math.sin(lam)) * (dmu - 1j * math.sin(mu) * dlam)
    c = q * a - 2.0 * omega
    j = w * (q * complex(psi) + 1j * (q - 1.0))
    return float(c), complex(j)


def curvature_vector(
    point: ShapePoint,
    field: BlochField,
    psi: complex,
    dpsi: tuple[complex, complex],
    patch: GaugePatch = GaugePatch.NORTH,
    step: float = 1e-5,
) -> np.ndarray:
    """Real 3-vector f with the curvature's theta-phi component f . sigma / 2i.

    Computed as F = dA_full + A_full ^ A_full from the closed-form connection
    components, with the exterior derivative taken by central differences in
    (theta, phi); ``dpsi = (dpsi/dtheta, dpsi/dphi)`` supplies the control's
    local derivative data.
    """
    th0, ph0 = point.colatitude, point.azimuth
    psi = complex(psi)
    dpsi_th, dpsi_ph = complex(dpsi[0]), complex(dpsi[1])
    if not all(
        np.isfinite(x) for x in (psi.real, psi.imag, dpsi_th.real, dpsi_th.imag, dpsi_ph.real, dpsi_ph.imag)
    ):
        raise ValidationError("control derivative data must be finite")

    def comp(th, ph, direction):
        pt = ShapePoint(th, ph % (2 * math.pi))
        tang = (1.0, 0.0) if direction == 0 else (0.0, 1.0)
        local_psi = psi + (th - th0) * dpsi_th + (ph - ph0) * dpsi_ph
        return connection_vector(pt, tang, field, local_psi, patch)

    h = step
    d_th_of_Aphi = (comp(th0 + h, ph0, 1) - comp(th0 - h, ph0, 1)) / (2 * h)
    d_ph_of_Ath = (comp(th0, ph0 + h, 0) - comp(th0, ph0 - h, 0)) / (2 * h)
    a_th = comp(th0, ph0, 0)
    a_ph = comp(th0, ph0, 1)
    # [v.sigma/2i, w.sigma/2i] = (v x w).sigma/2i  (cross-product commutator)
    commutator = np.cross(a_th, a_ph)
    return d_th_of_Aphi - d_ph_of_Ath + commutator


def curvature_sample(
    point: ShapePoint,
    field: BlochField,
    psi: complex,
    dpsi: tuple[complex, complex],
    patch: GaugePatch = GaugePatch.NORTH,
) -> np.ndarray:
    """Curvature theta-phi component as a 2x2 anti-Hermitian matrix."""
    return vector_to_su2(curvature_vector(point, field, psi, dpsi, patch))
