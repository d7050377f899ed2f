"""Concrete operator triples (H0, F, J) with perturbation V = F* J F.

Finite kinds carry dense matrices.  The half-line kinds carry the free
discrete Laplacian on l2(N) symbolically: its Green's function is known in
closed form, and a banded truncation is kept as an independent oracle.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import InvalidInputError, SingularPointError, UnsupportedError

HERMITIAN_TOL = 1e-12
BAND = (-2.0, 2.0)


class ModelKind(str, enum.Enum):
    FINITE_MATRIX = "FiniteMatrix"
    RANK_ONE = "RankOne"
    HALF_LINE_JACOBI = "HalfLineJacobi"
    EMBEDDED_BLOCK = "EmbeddedBlock"
    SYNTHETIC_FAMILY = "SyntheticFamily"


FINITE_KINDS = (ModelKind.FINITE_MATRIX, ModelKind.RANK_ONE)
INFINITE_KINDS = (ModelKind.HALF_LINE_JACOBI, ModelKind.EMBEDDED_BLOCK)


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _check_hermitian(J, name="J"):
    J = np.atleast_2d(np.asarray(J, dtype=complex))
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got shape {J.shape}")
    scale = max(1.0, float(np.max(np.abs(J))) if J.size else 1.0)
    if np.max(np.abs(J - J.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise InvalidInputError(f"{name} is not Hermitian")
    return J


@dataclass(frozen=True, eq=False)
class RiggedModel:
    """An immutable (H0, F, J) triple.

    For finite kinds ``h0`` is an ``(n, n)`` Hermitian matrix and
    ``rigging_F`` an ``(N_F, n)`` matrix.  For the half-line kinds ``h0`` and
    ``rigging_F`` are ``None``; the rigging is the coordinate projection onto
    ``sites`` (1-based lattice sites) or onto the embedded one-dimensional
    block.  Synthetic families bypass (H0, F) and supply ``T_z J`` directly
    through ``product``.
    """

    kind: ModelKind
    coupling_J: np.ndarray
    h0: Optional[np.ndarray] = None
    rigging_F: Optional[np.ndarray] = None
    ess_spectrum: tuple = ()
    truncation_dim: Optional[int] = None
    sites: tuple = ()
    lambda0: Optional[float] = None
    product: Optional[Callable[[complex], np.ndarray]] = None
    name: str = ""
    params: dict = field(default_factory=dict)

    @property
    def n_aux(self):
        """Dimension N_F of the auxiliary space."""
        return self.coupling_J.shape[0]

    @property
    def is_finite(self):
        return self.kind in FINITE_KINDS

    @property
    def has_boundary_values(self):
        return self.kind in INFINITE_KINDS

    def perturbation(self):
        """Dense V = F* J F (finite kinds only)."""
        if not self.is_finite:
            raise UnsupportedError(f"dense V unavailable for {self.kind.value}")
        F = self.rigging_F
        return F.conj().T @ self.coupling_J @ F

    def unperturbed_spectrum(self):
        """Eigenvalues of H0 for finite kinds."""
        if not self.is_finite:
            raise UnsupportedError(f"discrete spectrum unavailable for {self.kind.value}")
        return np.linalg.eigvalsh(self.h0)

    def in_essential_spectrum(self, lam, closed=False):
        for a, b in self.ess_spectrum:
            if (a <= lam <= b) if closed else (a < lam < b):
                return True
        return False

    def truncated_h0(self, dim=None):
        """Dense truncation of H0 (half-line kinds) or H0 itself (finite)."""
        if self.is_finite:
            return np.array(self.h0)
        if not self.has_boundary_values:
            raise UnsupportedError("synthetic families have no H0")
        dim = dim or self.truncation_dim
        lap = np.diag(np.ones(dim - 1), 1) + np.diag(np.ones(dim - 1), -1)
        if self.kind is ModelKind.HALF_LINE_JACOBI:
            return lap.astype(complex)
        out = np.zeros((dim + 1, dim + 1), dtype=complex)
        out[0, 0] = self.lambda0
        out[1:, 1:] = lap
        return out


def _finite(kind, h0, F, J, name, params):
    h0 = np.atleast_2d(np.asarray(h0, dtype=complex))
    if h0.shape[0] != h0.shape[1]:
        raise InvalidInputError("h0 must be square")
    if np.max(np.abs(h0 - h0.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(h0).max()):
        raise InvalidInputError("h0 is not Hermitian")
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    J = _check_hermitian(J)
    if F.shape[1] != h0.shape[0]:
        raise InvalidInputError(f"F has {F.shape[1]} columns, H0 has dimension {h0.shape[0]}")
    if F.shape[0] != J.shape[0]:
        raise InvalidInputError(f"F maps into dimension {F.shape[0]} but J is {J.shape[0]}x{J.shape[0]}")
    return RiggedModel(
        kind=kind,
        coupling_J=_frozen(J),
        h0=_frozen((h0 + h0.conj().T) / 2),
        rigging_F=_frozen(F),
        name=name,
        params=params,
    )


def make_finite(h0, J, F=None, name="finite"):
    """General finite model; ``F`` defaults to the identity."""
    h0 = np.atleast_2d(np.asarray(h0, dtype=complex))
    if F is None:
        F = np.eye(h0.shape[0])
    return _finite(ModelKind.FINITE_MATRIX, h0, F, J, name, {})


def make_rank_one(diag, phi, scale):
    """H0 = diag(diag), F psi = <phi, psi>, J = [scale], so V = scale * phi phi*."""
    diag = np.asarray(diag, dtype=float).ravel()
    phi = np.asarray(phi, dtype=complex).ravel()
    if diag.shape != phi.shape:
        raise InvalidInputError(f"len(diag)={diag.size} differs from len(phi)={phi.size}")
    if not np.any(phi != 0):
        raise InvalidInputError("phi must be a nonzero vector")
    return _finite(
        ModelKind.RANK_ONE,
        np.diag(diag),
        phi.conj()[None, :],
        [[float(scale)]],
        "rank_one",
        {"diag": diag.tolist(), "scale": float(scale)},
    )


def random_finite_model(rng, dim, rank=None, spread=2.0):
    """Random complex Hermitian H0 and J with a random rigging of the given rank."""
    rng = np.random.default_rng(rng)

    def herm(n):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return (a + a.conj().T) / (2.0 * np.sqrt(n))

    h0 = spread * herm(dim)
    if rank is None:
        F = np.eye(dim)
        rank = dim
    else:
        F = (rng.standard_normal((rank, dim)) + 1j * rng.standard_normal((rank, dim))) / np.sqrt(dim)
    J = herm(rank)
    return _finite(ModelKind.FINITE_MATRIX, h0, F, J, f"random{dim}", {"dim": dim})


def random_rank_one(rng, dim, scale=1.0):
    rng = np.random.default_rng(rng)
    diag = np.sort(rng.uniform(-2.5, 2.5, size=dim))
    phi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return make_rank_one(diag, phi / np.linalg.norm(phi), scale)


def make_half_line_jacobi(sites, J, truncation_dim=2000):
    """Free half-line Jacobi matrix rigged by projection onto lattice ``sites``."""
    sites = tuple(int(s) for s in sites)
    if not sites or any(s < 1 for s in sites):
        raise InvalidInputError("sites must be positive integers")
    if len(set(sites)) != len(sites):
        raise InvalidInputError("sites must be distinct")
    J = _check_hermitian(J)
    if J.shape[0] != len(sites):
        raise InvalidInputError(f"J is {J.shape[0]}x{J.shape[0]} but {len(sites)} sites given")
    if truncation_dim <= max(sites) + 50:
        raise InvalidInputError(
            f"truncation_dim={truncation_dim} must exceed max(sites) + 50 = {max(sites) + 50}"
        )
    return RiggedModel(
        kind=ModelKind.HALF_LINE_JACOBI,
        coupling_J=_frozen(J),
        ess_spectrum=(BAND,),
        truncation_dim=int(truncation_dim),
        sites=sites,
        name="half_line_jacobi",
        params={"sites": list(sites)},
    )


def make_embedded_block(lambda0, v, truncation_dim=2000):
    """[lambda0] (+) free half-line Jacobi, perturbed only on the block."""
    lambda0 = float(lambda0)
    if not BAND[0] < lambda0 < BAND[1]:
        raise InvalidInputError(f"lambda0={lambda0} is not embedded in (-2, 2)")
    if v == 0:
        raise InvalidInputError("v must be nonzero")
    if truncation_dim <= 51:
        raise InvalidInputError("truncation_dim too small")
    return RiggedModel(
        kind=ModelKind.EMBEDDED_BLOCK,
        coupling_J=_frozen([[float(v)]]),
        ess_spectrum=(BAND,),
        truncation_dim=int(truncation_dim),
        lambda0=lambda0,
        name="embedded_block",
        params={"lambda0": lambda0, "v": float(v)},
    )


def make_synthetic(product, size, name="synthetic", params=None):
    """A family whose T_z J is given directly by ``product(z)``."""
    return RiggedModel(
        kind=ModelKind.SYNTHETIC_FAMILY,
        coupling_J=_frozen(np.eye(size)),
        product=product,
        name=name,
        params=dict(params or {}),
    )


def make_sqrt_family(z0):
    """T_z J = [[0, 1], [z - z0, 0]]; eigenvalues +-sqrt(z - z0)."""
    z0 = complex(z0)

    def product(z):
        return np.array([[0.0, 1.0], [z - z0, 0.0]], dtype=complex)

    return make_synthetic(product, 2, "sqrt", {"z0": z0})


def make_two_point_family(a, b):
    """Eigenvalues +-sqrt((z - a)(z - b)): transpositions at a and b."""
    a, b = complex(a), complex(b)

    def product(z):
        return np.array([[0.0, 1.0], [(z - a) * (z - b), 0.0]], dtype=complex)

    return make_synthetic(product, 2, "two_point", {"a": a, "b": b})


def make_cubic_family(center, width):
    """Companion matrix of x^3 - 3x - 2w, w = (z - center)/width.

    Double roots sit at w = +-1; going around both yields a 3-cycle.
    """
    center, width = complex(center), float(width)

    def product(z):
        w = (z - center) / width
        return np.array([[0, 0, 2 * w], [1, 0, 3], [0, 1, 0]], dtype=complex)

    return make_synthetic(product, 3, "cubic", {"center": center, "width": width})


def _omega(z):
    """Root of w^2 - z w + 1 = 0 with |w| < 1, extended to z = lambda + i0."""
    z = complex(z)
    s = np.sqrt(complex(z.real - 2, z.imag)) * np.sqrt(complex(z.real + 2, z.imag))
    w = (z - s) / 2
    if abs(w) > 1 + 1e-12:
        w = 1 / w
    return w


def half_line_green(m, n, z):
    """<delta_m, (H0 - z)^-1 delta_n> for the free half-line Jacobi matrix.

    Valid for Im z > 0 and, as the upper boundary value, for real z off the
    band edges.
    """
    z = complex(z)
    if z.imag == 0 and abs(abs(z.real) - 2) < 1e-12:
        raise SingularPointError(f"band edge {z.real} has no boundary value")
    w = _omega(z)
    return (w ** abs(m - n) - w ** (m + n)) / (w - 1 / w)


def truncated_half_line_T(sites, z, dim):
    """Sandwiched resolvent of the dim-site truncation, via a banded solve."""
    z = complex(z)
    ab = np.zeros((3, dim), dtype=complex)
    ab[0, 1:] = 1.0
    ab[2, :-1] = 1.0
    ab[1, :] = -z
    rhs = np.zeros((dim, len(sites)), dtype=complex)
    idx = [s - 1 for s in sites]
    rhs[idx, range(len(sites))] = 1.0
    sol = solve_banded((1, 1), ab, rhs)
    return sol[idx, :]
