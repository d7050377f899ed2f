"""Sandwiched resolvent T_z = F (H0 - z)^-1 F* and the resonance multiset.

The coupling resonances at z are r_j = -1/sigma_j where sigma_j runs over the
nonzero eigenvalues of T_z J.  Equivalently they are the values of s where
det(I + s T_z J) vanishes.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import SingularPointError, UnsupportedError
from .models import ModelKind, RiggedModel, half_line_green, truncated_half_line_T
from .multiset import BasedMultiset

#: relative zero threshold: |sigma| <= TAU_SIGMA * ||T_z J|| joins the base point
TAU_SIGMA = 1e-10
SINGULAR_TOL = 1e-12

_H0_SPECTRA = weakref.WeakKeyDictionary()


def _h0_spectrum(model):
    eig = _H0_SPECTRA.get(model)
    if eig is None:
        eig = _H0_SPECTRA[model] = np.linalg.eigvalsh(model.h0)
    return eig


@dataclass(frozen=True)
class SandwichedResolvent:
    z: complex
    matrix: np.ndarray
    boundary_flag: bool


@dataclass(frozen=True)
class SigmaMultiset:
    """Nonzero eigenvalues of T_z J above the threshold ``tau``.

    ``merged`` counts eigenvalues that were folded into the base point.
    """

    z: complex
    sigmas: np.ndarray
    tau: float
    merged: int = 0

    def resonances(self):
        return -1.0 / self.sigmas

    def as_multiset(self):
        return BasedMultiset.from_values(self.sigmas)

    def __len__(self):
        return len(self.sigmas)


def eval_T(model: RiggedModel, z) -> SandwichedResolvent:
    """Exact N_F x N_F sandwiched resolvent at ``z``.

    Real ``z`` is a boundary request: for the half-line kinds it returns the
    ``lambda + i0`` limit, for finite kinds it is accepted off the spectrum
    of H0.  Finite kinds also accept Im z < 0.
    """
    z = complex(z)
    boundary = z.imag == 0.0
    kind = model.kind

    if kind is ModelKind.SYNTHETIC_FAMILY:
        return SandwichedResolvent(z, np.asarray(model.product(z), dtype=complex), boundary)

    if model.is_finite:
        h0 = model.h0
        eig = _h0_spectrum(model)
        scale = max(1.0, float(np.max(np.abs(eig))))
        if np.min(np.abs(eig - z)) <= SINGULAR_TOL * scale:
            raise SingularPointError(f"z={z} is an eigenvalue of H0")
        F = model.rigging_F
        X = la.solve(h0 - z * np.eye(h0.shape[0]), F.conj().T)
        return SandwichedResolvent(z, F @ X, boundary)

    if z.imag < 0:
        raise UnsupportedError("half-line models are evaluated in the closed upper half-plane only")
    if boundary:
        lam = z.real
        if abs(abs(lam) - 2.0) < 1e-12:
            raise SingularPointError(f"band edge {lam} has no boundary value")

    if kind is ModelKind.HALF_LINE_JACOBI:
        s = model.sites
        T = np.array([[half_line_green(a, b, z) for b in s] for a in s], dtype=complex)
        return SandwichedResolvent(z, T, boundary)

    if kind is ModelKind.EMBEDDED_BLOCK:
        if abs(model.lambda0 - z) <= SINGULAR_TOL:
            raise SingularPointError(f"z={z} is the embedded eigenvalue")
        return SandwichedResolvent(z, np.array([[1.0 / (model.lambda0 - z)]]), boundary)

    raise UnsupportedError(f"no evaluator for {kind}")


def eval_T_truncated(model: RiggedModel, z, dim=None):
    """Oracle path: T_z from a finite truncation of H0 (Im z > 0 expected)."""
    z = complex(z)
    dim = dim or model.truncation_dim
    if model.kind is ModelKind.HALF_LINE_JACOBI:
        return truncated_half_line_T(model.sites, z, dim)
    if model.kind is ModelKind.EMBEDDED_BLOCK:
        # F only sees the block, which is decoupled from the lattice part
        h = model.truncated_h0(dim)
        e = np.zeros(h.shape[0])
        e[0] = 1.0
        return np.array([[la.solve(h - z * np.eye(h.shape[0]), e)[0]]])
    if model.is_finite:
        return eval_T(model, z).matrix
    raise UnsupportedError(f"no truncation for {model.kind}")


def product_TJ(model, z):
    return eval_T(model, z).matrix @ model.coupling_J


def resonance_spectrum(model: RiggedModel, z, tau_sigma=TAU_SIGMA) -> SigmaMultiset:
    """Eigenvalues of T_z J above ``tau_sigma * ||T_z J||_2``."""
    TJ = product_TJ(model, z)
    norm = np.linalg.norm(TJ, 2)
    if norm == 0.0:
        return SigmaMultiset(complex(z), np.zeros(0, dtype=complex), 0.0, TJ.shape[0])
    sig = la.eigvals(TJ)
    tau = tau_sigma * norm
    keep = np.abs(sig) > tau
    return SigmaMultiset(complex(z), sig[keep], tau, int(np.count_nonzero(~keep)))


def resonances(model, z, tau_sigma=TAU_SIGMA):
    """Coupling resonance values r_j(z) = -1/sigma_j(z)."""
    return resonance_spectrum(model, z, tau_sigma).resonances()


def det_residuals(model, z, r_values=None):
    """|det(I + r T_z J)| for each resonance r (the pole characterisation)."""
    TJ = product_TJ(model, z)
    if r_values is None:
        r_values = resonances(model, z)
    eye = np.eye(TJ.shape[0])
    return np.array([abs(la.det(eye + r * TJ)) for r in r_values])


@dataclass
class HerglotzReport:
    min_im: float
    max_im: float
    argmin: complex
    passed: bool


def herglotz_check(model, grid) -> HerglotzReport:
    """Check Im r(z) > 0 on ``grid`` for a rank-one model.

    For a positive rank-one perturbation the single resonance is a Herglotz
    function; a negative coupling flips the sign.
    """
    if model.kind is not ModelKind.RANK_ONE:
        raise UnsupportedError("Herglotz check needs a rank-one model")
    grid = np.asarray(list(grid), dtype=complex)
    if np.any(grid.imag <= 0):
        raise UnsupportedError("grid must lie in the open upper half-plane")
    ims = []
    for z in grid:
        r = resonances(model, z)
        ims.append(r[0].imag if len(r) else np.nan)
    ims = np.array(ims)
    k = int(np.nanargmin(ims))
    return HerglotzReport(float(np.nanmin(ims)), float(np.nanmax(ims)), complex(grid[k]),
                          bool(np.nanmin(ims) > 0))


def scaled_det_residuals(model, z, r_values=None):
    """|det(I + r T_z J)| divided by max(1, product of all but the smallest singular value).

    The divisor is the size |det| reaches when the one vanishing singular
    value is perturbed by a unit amount, so the ratio measures how far r is
    from an exact pole independently of the conditioning of the other
    factors.
    """
    TJ = product_TJ(model, z)
    if r_values is None:
        r_values = resonances(model, z)
    eye = np.eye(TJ.shape[0])
    out = []
    for r in r_values:
        M = eye + r * TJ
        sv = la.svdvals(M)
        out.append(abs(la.det(M)) / max(1.0, float(np.prod(sv[:-1]))))
    return np.array(out)
