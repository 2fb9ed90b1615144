import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from jamsim.core.errors import NullingViolationError
from jamsim.models import NullSpaceDesign, PowerConfig
from jamsim.schemas import RateReport
from jamsim.services.jamming import sample_noise

# Bob-side residual allowed per sample, relative to sum_r ||h_r|| ||n_r||.
NULLING_RTOL = 1e-10


@dataclass(frozen=True)
class ReceptionEstimate:
    eve_interference_power: float
    eve_interference_stderr: float
    bob_max_relative_residual: float
    n_samples: int
    # Received power left after removing the source term: N0 at Bob, I + N0 at Eve.
    bob_disturbance_power: float = 0.0
    eve_disturbance_power: float = 0.0


def total_leakage(designs: Sequence[NullSpaceDesign]) -> float:
    return float(sum(design.interference_power for design in designs))


def jamming_objective(designs: Sequence[NullSpaceDesign]) -> float:
    """sum_r beta_r phi_r, the position-dependent objective left once weights sit at their bounds."""
    return float(sum(design.beta_r * design.leakage_phi for design in designs))


def rate_from_interference(power: PowerConfig, h_A: complex, g_A: complex, interference: float) -> RateReport:
    bob_snr = power.source_power_Ps * abs(h_A) ** 2 / power.noise_floor_N0
    eve_sinr = power.source_power_Ps * abs(g_A) ** 2 / (interference + power.noise_floor_N0)
    supremum = math.log2(1.0 + bob_snr)
    return RateReport(
        secrecy_rate=supremum - math.log2(1.0 + eve_sinr),
        rate_supremum=supremum,
        bob_snr_term=bob_snr,
        eve_sinr_term=eve_sinr,
        total_leakage=interference,
    )


def secrecy_rate(
    power: PowerConfig,
    h_A: complex,
    g_A: complex,
    designs: Sequence[NullSpaceDesign],
) -> RateReport:
    """Signed secrecy rate in bits per channel use; see ``RateReport.clamped_rate`` for max(0, R)."""
    return rate_from_interference(power, h_A, g_A, total_leakage(designs))


def simulate_reception(
    power: PowerConfig,
    h_A: complex,
    g_A: complex,
    channels: Sequence[tuple[np.ndarray, np.ndarray]],
    designs: Sequence[NullSpaceDesign],
    n_samples: int,
    rng: np.random.Generator,
) -> ReceptionEstimate:
    """
    Draw the received signals at Bob and Eve sample by sample, check that Bob
    sees no jamming, and estimate the jamming power reaching Eve.
    """
    if n_samples < 10_000:
        raise ValueError("simulate_reception needs at least 10^4 samples")
    if len(channels) != len(designs):
        raise ValueError("one (h_r, g_r) pair is needed per design")

    bob_jamming = np.zeros(n_samples, dtype=complex)
    eve_jamming = np.zeros(n_samples, dtype=complex)
    residual_scale = np.zeros(n_samples)
    for (h_r, g_r), design in zip(channels, designs):
        noise = sample_noise(design, rng, size=n_samples)
        bob_jamming += noise @ np.asarray(h_r, dtype=complex)
        eve_jamming += noise @ np.asarray(g_r, dtype=complex)
        residual_scale += np.linalg.norm(h_r) * np.linalg.norm(noise, axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(residual_scale > 0, np.abs(bob_jamming) / residual_scale, 0.0)
    worst = float(relative.max(initial=0.0))
    if worst > NULLING_RTOL:
        raise NullingViolationError(f"Bob receives jamming: relative residual {worst:.3e}")

    x = (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples)) / math.sqrt(2.0)
    awgn_std = math.sqrt(power.noise_floor_N0 / 2.0)
    n_bob = awgn_std * (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples))
    n_eve = awgn_std * (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples))
    source = math.sqrt(power.source_power_Ps) * x
    y_bob = h_A * source + bob_jamming + n_bob
    y_eve = g_A * source + eve_jamming + n_eve

    interference = np.abs(eve_jamming) ** 2
    return ReceptionEstimate(
        eve_interference_power=float(interference.mean()),
        eve_interference_stderr=float(interference.std(ddof=1) / math.sqrt(n_samples)),
        bob_max_relative_residual=worst,
        n_samples=n_samples,
        bob_disturbance_power=float(np.mean(np.abs(y_bob - h_A * source) ** 2)),
        eve_disturbance_power=float(np.mean(np.abs(y_eve - g_A * source) ** 2)),
    )
