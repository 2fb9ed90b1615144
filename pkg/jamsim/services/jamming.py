"""
Bob-nulling jamming noise.

Each helper transmits n_r = w_r E_r t_r, where the columns of E_r are an
orthonormal basis of the right null space of the row h_r^T, so h_r^T n_r = 0
and Bob receives no jamming. Eve receives g_r^T n_r, so the leakage gain is
phi_r = ||E_r^T g_r||^2, the power of g_r seen through the transposed basis.
Only the projector E_r E_r^H enters any objective, so the (non-unique)
basis is recomputed for every evaluation and never carried across position
updates.
"""
import math

import numpy as np
from scipy.linalg import null_space

from jamsim.core.errors import DegenerateChannelError
from jamsim.models import NullSpaceDesign

# Singular values below this fraction of the largest one count as zero.
RANK_RCOND = 1e-12
_DEGENERATE_NORM = 1e-300


def _check_channels(h_r: np.ndarray, g_r: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    h = np.asarray(h_r, dtype=complex).ravel()
    if h.size < 2:
        raise ValueError("nulling needs at least two antennas")
    if not np.all(np.isfinite(h)) or np.linalg.norm(h) <= _DEGENERATE_NORM:
        raise DegenerateChannelError("helper-to-Bob channel is numerically zero")
    if g_r is None:
        return h, None
    g = np.asarray(g_r, dtype=complex).ravel()
    if g.shape != h.shape:
        raise ValueError("h_r and g_r must have one entry per antenna")
    return h, g


def null_space_basis(h_r: np.ndarray) -> np.ndarray:
    """Column-orthonormal N x (N-1) basis E with h^T E = 0."""
    h, _ = _check_channels(h_r)
    basis = null_space(h[np.newaxis, :], rcond=RANK_RCOND)
    if basis.shape != (h.size, h.size - 1):
        raise DegenerateChannelError(f"null space of h_r^T has dimension {basis.shape[1]}, expected {h.size - 1}")
    return basis


def leakage_phi_closed_form(h_r: np.ndarray, g_r: np.ndarray) -> float:
    """||E^T g||^2 via the projector identity ||g||^2 - |h^H g|^2 / ||h||^2."""
    h, g = _check_channels(h_r, g_r)
    h_norm_sq = float(np.vdot(h, h).real)
    g_norm_sq = float(np.vdot(g, g).real)
    along_h = abs(np.vdot(h, g)) ** 2 / h_norm_sq
    return max(0.0, g_norm_sq - along_h)


def build_design(h_r: np.ndarray, g_r: np.ndarray, power_budget: float) -> NullSpaceDesign:
    """Nulling design with the weight at its power bound P_r / (N_r - 1)."""
    if power_budget < 0:
        raise ValueError("power budget must be non-negative")
    h, g = _check_channels(h_r, g_r)
    basis = null_space_basis(h)
    leakage = float(np.linalg.norm(basis.T @ g) ** 2)
    return NullSpaceDesign(
        basis_E=basis,
        leakage_phi=leakage,
        weight_sq=power_budget / (h.size - 1),
        power_budget_P=power_budget,
    )


def sample_noise(design: NullSpaceDesign, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw n = w E t with t ~ CN(0, I); one vector, or ``size`` rows."""
    columns = design.basis_E.shape[1]
    shape = (columns,) if size is None else (size, columns)
    t = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    weight = math.sqrt(design.weight_sq)
    return weight * (t @ design.basis_E.T)
