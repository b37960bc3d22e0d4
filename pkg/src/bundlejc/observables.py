"""Measured quantities: photon and dressed-state populations, equal-time
high-order correlations, and time-delayed bundle correlation functions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.linalg import matrix_power

from .dynamics import LiouvillePropagator, build_liouvillian, steady_state
from .hilbert import DensityMatrix, Operator, StateVector, fock_annihilation
from .model import ModelParams, dressed_state

__all__ = [
    "CorrelationCurve",
    "photon_distribution",
    "dressed_population",
    "dressed_populations",
    "g_equal_time",
    "tau_min",
    "g2_bundle_delayed",
]


@dataclass(frozen=True)
class CorrelationCurve:
    """kind is 'equal_time_order_l' (order = l, abscissa = delta_a values) or
    'delayed_gN2' (order = N, abscissa = tau values)."""

    kind: str
    order: int
    abscissa: np.ndarray
    values: np.ndarray


def photon_distribution(rho: DensityMatrix) -> np.ndarray:
    """P_m = Tr[(|m><m| x I_2) rho] for m = 0..n_max."""
    pops = np.diagonal(rho.mat).real
    return pops[0::2] + pops[1::2]


def dressed_population(
    state: StateVector | DensityMatrix, p: ModelParams, m: int, branch: str
) -> float:
    """Population of |m>|+-> built from the laser-dressed TLS states."""
    v = dressed_state(p, m, branch).amp
    if isinstance(state, StateVector):
        return float(abs(np.vdot(v, state.amp)) ** 2)
    return float(np.real(v.conj() @ state.mat @ v))


def dressed_populations(state: StateVector | DensityMatrix, p: ModelParams) -> np.ndarray:
    """All P_{|m>|+->} as an (n_max+1, 2) array, columns ordered (+, -)."""
    out = np.empty((p.n_max + 1, 2))
    for m in range(p.n_max + 1):
        out[m, 0] = dressed_population(state, p, m, "+")
        out[m, 1] = dressed_population(state, p, m, "-")
    return out


def g_equal_time(rho: DensityMatrix, ell: int) -> float:
    """Equal-time normalized correlation Tr(a^dag^l a^l rho) / Tr(a^dag a rho)^l."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    a = fock_annihilation(rho.dims).mat
    n_mean = float(np.trace(a.conj().T @ a @ rho.mat).real)
    if n_mean <= 1e-12:
        raise ValueError("correlation undefined: vanishing mean photon number")
    al = matrix_power(a, ell)
    num = float(np.trace(al.conj().T @ al @ rho.mat).real)
    return num / n_mean**ell


def tau_min(N: int, kappa: float) -> float:
    """Shortest delay at which the N-photon bundle correlation is well defined:
    sum_{m=1..N} 1/(m kappa)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    return sum(1.0 / (m * kappa) for m in range(1, N + 1))


def _clamp_nonnegative(values: np.ndarray) -> np.ndarray:
    if values.min() < 0:
        warnings.warn(
            f"clamping {int((values < 0).sum())} slightly negative correlation "
            f"values (min {values.min():.3e}) to 0",
            stacklevel=3,
        )
        values = np.maximum(values, 0.0)
    return values


def g2_bundle_delayed(
    p: ModelParams,
    N: int,
    tau_grid=None,
    *,
    propagator: LiouvillePropagator | None = None,
    rho_ss: DensityMatrix | None = None,
    mask_below_tau_min: bool | None = None,
    n_points: int = 200,
) -> CorrelationCurve:
    """Delayed second-order correlation of the N-photon bundle.

    Quantum regression: the collapsed operator a^N rho_ss a^dagN is propagated
    under the Liouvillian and measured with a^dagN a^N; both denominator
    factors are the stationary value.  N=1 recovers the standard g2(tau).

    For N >= 2 delays below tau_min (where the bundle correlation is not
    meaningful) are masked out of the default grid; pass
    mask_below_tau_min=False to evaluate an explicit grid as given.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if p.kappa <= 0:
        raise ValueError("kappa must be > 0 for emission correlations")
    if propagator is None:
        propagator = LiouvillePropagator(build_liouvillian(p))
    if rho_ss is None:
        rho_ss = steady_state(propagator.L)

    t_floor = tau_min(N, p.kappa)
    if tau_grid is None:
        tau_grid = np.geomspace(t_floor, 30.0 / p.kappa, n_points)
    else:
        tau_grid = np.asarray(tau_grid, dtype=float)
        if mask_below_tau_min is None:
            mask_below_tau_min = N >= 2
        if mask_below_tau_min:
            tau_grid = tau_grid[tau_grid >= t_floor]
    if len(tau_grid) == 0:
        raise ValueError("empty tau grid after masking below tau_min")

    a = fock_annihilation(p.dims).mat
    an = matrix_power(a, N)
    meas = an.conj().T @ an
    denom = float(np.trace(meas @ rho_ss.mat).real)
    if denom <= 1e-14:
        raise ValueError("bundle occupation too small: denominator under threshold")
    collapsed = an @ rho_ss.mat @ an.conj().T
    propagated = propagator.propagate(collapsed, tau_grid)
    values = np.einsum("ij,tji->t", meas, propagated).real / denom**2
    values = _clamp_nonnegative(values)
    return CorrelationCurve(
        kind="delayed_gN2", order=N, abscissa=tau_grid, values=values
    )
