"""Closed-loop formation-error matrix assembly and numerical Hurwitz checks.

The formation error of the whole platoon evolves under

    Ac = I_N (x) A - (L + P) (x) B k^T,

which a similarity transform built from the coupling matrix block-
triangularizes into N independent 4x4 (or 3x3, without the integral state)
blocks A - lam_i B k^T.  This module is the numerical cross-check oracle for
the closed-form gain certificates.

The full spectrum is computed through a complex Schur factorization of the
coupling matrix rather than a dense eigensolve of Ac: repeated coupling
eigenvalues make Ac defective, and a direct unsymmetric eigensolve then
scatters eigenvalues by roughly norm * eps^(1/multiplicity) (about 1e-1 for
a nine-deep chain), far beyond the tolerances the block-union identity is
checked at.  The Schur route is an exact similarity and keeps the spectrum
accurate to solver precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .control import GainVector
from .dynamics import VehicleParams, linear_model
from .topology import Topology, coupling_spectrum

MAX_STATES = 400


@dataclass(frozen=True)
class ClosedLoopSystem:
    """Kronecker-structured closed loop plus its per-eigenvalue blocks."""

    full_matrix: np.ndarray
    blocks: tuple
    eigenvalues_full: np.ndarray
    spectral_abscissa: float
    order: int


def _gain_row(gains: GainVector, order: int) -> np.ndarray:
    k = gains.as_array()
    return k if order == 4 else k[1:]


def build_closed_loop(
    topo: Topology,
    gains: GainVector,
    tau: float,
    order: int | None = None,
) -> ClosedLoopSystem:
    """Assemble the closed-loop formation-error matrix and its spectrum.

    ``order`` defaults to 4 when the integral gain is active and 3 when
    kappa_s = 0 (the integral state is then open loop and the integral-free
    model is the one the corollary conditions certify).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if order is None:
        order = 4 if gains.kappa_s != 0.0 else 3
    if order not in (3, 4):
        raise ValueError("order must be 3 or 4")
    n = topo.n_followers
    if n * order > MAX_STATES:
        raise ValueError(f"{n * order} states exceeds cap of {MAX_STATES}")

    model = linear_model(order, VehicleParams(powertrain_tau=tau))
    a, b = model.A, model.B[:, 0]
    k = _gain_row(gains, order)
    bk = np.outer(b, k)
    m = topo.coupling_matrix()
    full = np.kron(np.eye(n), a) - np.kron(m, bk)

    spec = coupling_spectrum(topo)
    blocks = tuple(a - lam * bk for lam in spec.real_eigenvalues)

    # Full spectrum via Schur block-triangularization of the coupling matrix
    # (exact similarity; see module docstring).
    t_schur, _ = scipy.linalg.schur(m.astype(complex), output="complex")
    eig_full = np.concatenate(
        [np.linalg.eigvals(a - t_schur[i, i] * bk) for i in range(n)]
    )
    order_idx = np.lexsort((eig_full.imag, eig_full.real))
    eig_full = eig_full[order_idx]
    return ClosedLoopSystem(
        full_matrix=full,
        blocks=blocks,
        eigenvalues_full=eig_full,
        spectral_abscissa=float(eig_full.real.max()),
        order=order,
    )


def is_hurwitz(system: ClosedLoopSystem, tol: float = 1e-9) -> bool:
    """True iff the spectral abscissa is strictly below -tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return system.spectral_abscissa < -tol


def block_spectrum_union_check(system: ClosedLoopSystem, tol: float = 1e-8) -> bool:
    """Match the full spectrum against the union of block spectra.

    Uses an optimal bipartite pairing; True iff the worst pairing distance
    stays below tol.
    """
    block_eigs = np.concatenate([np.linalg.eigvals(b) for b in system.blocks])
    full = system.eigenvalues_full
    if full.shape != block_eigs.shape:
        return False
    cost = np.abs(full[:, None] - block_eigs[None, :])
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].max() < tol)


def spectrum_csv_rows(system: ClosedLoopSystem):
    """(block-index, real, imag) rows for the spectrum dump."""
    rows = []
    for idx, blk in enumerate(system.blocks, start=1):
        for lam in np.linalg.eigvals(blk):
            rows.append((idx, lam.real, lam.imag))
    return rows
