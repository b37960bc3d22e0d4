"""Time evolution: Schrodinger integration, Lindblad dynamics, steady states,
and Monte Carlo wave-function (quantum-jump) trajectories.

The Liouvillian is materialized as a dense superoperator acting on the
column-stacked vectorization of rho.  Master-equation propagation defaults to
the spectral decomposition of the (time-independent) Liouvillian, which is
exact at the sample times; fixed-step RK4 and an adaptive scheme are kept as
alternatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import (
    DensityMatrix,
    Operator,
    SpaceDims,
    StateVector,
    fock_annihilation,
    tls_operator,
)
from .model import ModelParams, build_H_I

__all__ = [
    "IntegratorConfig",
    "Liouvillian",
    "TrajectoryRecord",
    "TruncationError",
    "schrodinger_evolve",
    "build_liouvillian",
    "LiouvillePropagator",
    "lindblad_evolve",
    "steady_state",
    "mcwf_trajectory",
    "run_trajectories",
    "trajectory_average",
]

TAIL_TOL = 1e-8


class TruncationError(RuntimeError):
    """Population reached the highest kept Fock level; n_max is too small."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration controls.  dt=None means the conservative default
    dt = 0.01 / (spectral scale of the generator)."""

    scheme: str = "fixed_rk4"
    dt: float | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.scheme not in ("fixed_rk4", "adaptive", "spectral"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be > 0")


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(mat).flatten(order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


def schrodinger_evolve(
    H: Operator,
    psi0: StateVector,
    t_grid,
    cfg: IntegratorConfig | None = None,
) -> np.ndarray:
    """Integrate i dpsi/dt = H psi; returns amplitudes at each grid time.

    No renormalization is applied: norm drift beyond 1e-5 aborts, because it
    means the step size was too coarse for the spectral range of H.
    """
    cfg = cfg or IntegratorConfig()
    if not H.is_hermitian(1e-10):
        raise ValueError("H must be Hermitian")
    t_grid = np.asarray(t_grid, dtype=float)
    psi = psi0.amp.astype(complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    mat = H.mat

    if cfg.scheme == "adaptive":
        sol = solve_ivp(
            lambda t, y: -1j * (mat @ y),
            (t_grid[0], t_grid[-1]),
            psi,
            t_eval=t_grid,
            method="DOP853",
            rtol=cfg.rel_tol,
            atol=cfg.abs_tol,
        )
        history = sol.y.T.copy()
    else:
        scale = float(np.max(np.abs(np.linalg.eigvalsh(mat)))) or 1.0
        dt = cfg.dt if cfg.dt is not None else 0.01 / scale
        history = np.empty((len(t_grid), len(psi)), dtype=complex)
        t = t_grid[0]
        history[0] = psi
        for k, t_next in enumerate(t_grid[1:], start=1):
            span = t_next - t
            n_steps = max(1, int(math.ceil(span / dt)))
            h = span / n_steps
            for _ in range(n_steps):
                k1 = -1j * (mat @ psi)
                k2 = -1j * (mat @ (psi + 0.5 * h * k1))
                k3 = -1j * (mat @ (psi + 0.5 * h * k2))
                k4 = -1j * (mat @ (psi + h * k3))
                psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t_next
            history[k] = psi

    drift = np.abs(np.linalg.norm(history, axis=1) - 1.0).max()
    if drift > 1e-5:
        raise RuntimeError(f"step size too coarse: norm drift {drift:.3e}")
    return history


@dataclass(frozen=True)
class Liouvillian:
    """Dense superoperator on column-stacked rho."""

    dims: SpaceDims
    mat: np.ndarray

    def apply(self, rho_mat: np.ndarray) -> np.ndarray:
        d = self.dims.total_dim
        return unvec(self.mat @ vec(rho_mat), d)


def _dissipator_super(op: np.ndarray) -> np.ndarray:
    d = op.shape[0]
    eye = np.eye(d)
    opdop = op.conj().T @ op
    return (
        np.kron(op.conj(), op)
        - 0.5 * np.kron(eye, opdop)
        - 0.5 * np.kron(opdop.T, eye)
    )


def build_liouvillian(p: ModelParams) -> Liouvillian:
    """L(rho) = -i[H_I, rho] + kappa D[a] rho + gamma D[sigma_-] rho."""
    dims = p.dims
    h = build_H_I(p).mat
    eye = np.eye(dims.total_dim)
    lmat = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    if p.kappa > 0:
        lmat = lmat + p.kappa * _dissipator_super(fock_annihilation(dims).mat)
    if p.gamma > 0:
        lmat = lmat + p.gamma * _dissipator_super(tls_operator("sigma_minus", dims).mat)
    return Liouvillian(dims, lmat)


class LiouvillePropagator:
    """Spectral form of exp(L t); one eigendecomposition, cheap reuse.

    Propagates arbitrary (not necessarily trace-one) operators, which is what
    the regression pathway for two-time correlators needs.
    """

    def __init__(self, L: Liouvillian):
        self.L = L
        self._evals, self._evecs = np.linalg.eig(L.mat)
        self._inv = np.linalg.inv(self._evecs)

    def propagate(self, op_mat: np.ndarray, taus) -> np.ndarray:
        """Returns an array of operators exp(L tau) op, one per tau."""
        d = self.L.dims.total_dim
        c0 = self._inv @ vec(op_mat)
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        out = np.empty((len(taus), d, d), dtype=complex)
        for i, tau in enumerate(taus):
            out[i] = unvec(self._evecs @ (np.exp(self._evals * tau) * c0), d)
        return out


def _check_density_history(history, trace_tol=1e-7, herm_tol=1e-9, eig_floor=-1e-7):
    for rho in history:
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > herm_tol:
            raise RuntimeError(f"Hermiticity violated: {herm:.3e}")
        tr = rho.trace().real
        if abs(tr - 1.0) > trace_tol:
            raise RuntimeError(f"trace violated: {tr}")
        ev_min = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
        if ev_min < eig_floor:
            raise RuntimeError(f"positivity violated: min eigenvalue {ev_min:.3e}")


def lindblad_evolve(
    L: Liouvillian,
    rho0: DensityMatrix,
    t_grid,
    cfg: IntegratorConfig | None = None,
) -> np.ndarray:
    """Propagate rho0 under L; returns density matrices at each grid time."""
    cfg = cfg or IntegratorConfig(scheme="spectral")
    t_grid = np.asarray(t_grid, dtype=float)
    d = L.dims.total_dim
    rho0.validate()

    if cfg.scheme == "spectral":
        history = LiouvillePropagator(L).propagate(rho0.mat, t_grid - t_grid[0])
    elif cfg.scheme == "adaptive":
        sol = solve_ivp(
            lambda t, y: L.mat @ y,
            (t_grid[0], t_grid[-1]),
            vec(rho0.mat),
            t_eval=t_grid,
            method="DOP853",
            rtol=cfg.rel_tol,
            atol=cfg.abs_tol,
        )
        history = np.array([unvec(col, d) for col in sol.y.T])
    else:
        scale = float(np.abs(L.mat).sum(axis=1).max()) or 1.0
        dt = cfg.dt if cfg.dt is not None else 0.01 / scale
        y = vec(rho0.mat)
        history = np.empty((len(t_grid), d, d), dtype=complex)
        history[0] = rho0.mat
        t = t_grid[0]
        for k, t_next in enumerate(t_grid[1:], start=1):
            span = t_next - t
            n_steps = max(1, int(math.ceil(span / dt)))
            h = span / n_steps
            for _ in range(n_steps):
                k1 = L.mat @ y
                k2 = L.mat @ (y + 0.5 * h * k1)
                k3 = L.mat @ (y + 0.5 * h * k2)
                k4 = L.mat @ (y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t_next
            history[k] = unvec(y, d)

    _check_density_history(history)
    return history


def _truncation_tail(rho_mat: np.ndarray, dims: SpaceDims) -> float:
    i = dims.index(dims.n_max, 0)
    return float(rho_mat[i, i].real + rho_mat[i + 1, i + 1].real)


def steady_state(L: Liouvillian, tail_tol: float | None = TAIL_TOL) -> DensityMatrix:
    """Unique stationary density matrix of L.

    Solves the vectorized linear system with one row replaced by the trace
    constraint.  If the solution does not satisfy L rho = 0, the null space is
    inspected to distinguish a degenerate steady state from a solver failure.
    """
    d = L.dims.total_dim
    a = L.mat.copy()
    trace_row = vec(np.eye(d))
    a[0, :] = trace_row
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    l_scale = np.linalg.norm(L.mat)
    try:
        x = np.linalg.solve(a, b)
        residual = np.linalg.norm(L.mat @ x)
    except np.linalg.LinAlgError:
        x, residual = None, np.inf

    if x is None or residual > 1e-9 * l_scale:
        # fall back to an explicit null-space computation
        _, svals, vh = np.linalg.svd(L.mat)
        null_dim = int(np.sum(svals < 1e-10 * svals[0]))
        if null_dim != 1:
            raise RuntimeError(f"degenerate steady state: null-space dimension {null_dim}")
        x = vh[-1].conj()
        x = x / (trace_row @ x)
        residual = np.linalg.norm(L.mat @ x)
        if residual > 1e-9 * l_scale:
            raise RuntimeError(f"steady-state residual too large: {residual:.3e}")

    rho = unvec(x, d)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / rho.trace().real
    if tail_tol is not None:
        tail = _truncation_tail(rho, L.dims)
        if tail >= tail_tol:
            raise TruncationError(
                f"top Fock level holds population {tail:.3e} >= {tail_tol:.1e}; "
                "increase n_max"
            )
    return DensityMatrix(L.dims, rho)


@dataclass
class TrajectoryRecord:
    """One quantum-jump unraveling: normalized states at the sample times plus
    the (time, channel) list of jumps, channel in {'cavity', 'tls'}."""

    seed: int
    times: np.ndarray
    states: np.ndarray  # (n_samples, total_dim), normalized
    jumps: list


class _JumpPropagator:
    """Exact evolution under the non-Hermitian H_I - (i/2)(kappa a^dag a +
    gamma sigma_+ sigma_-), via eigendecomposition.  Shared across an ensemble."""

    def __init__(self, p: ModelParams):
        self.p = p
        dims = p.dims
        a = fock_annihilation(dims).mat
        sm = tls_operator("sigma_minus", dims).mat
        h_nh = (
            build_H_I(p).mat
            - 0.5j * (p.kappa * (a.conj().T @ a) + p.gamma * (sm.conj().T @ sm))
        )
        self.a = a
        self.sm = sm
        self._evals, self._evecs = np.linalg.eig(h_nh)
        self._inv = np.linalg.inv(self._evecs)

    def advance(self, psi: np.ndarray, dt: float) -> np.ndarray:
        c = self._inv @ psi
        return self._evecs @ (np.exp(-1j * self._evals * dt) * c)


def mcwf_trajectory(
    p: ModelParams,
    psi0: StateVector,
    t_final: float,
    seed: int,
    sample_dt: float,
    _prop: _JumpPropagator | None = None,
) -> TrajectoryRecord:
    """Single quantum-jump trajectory of the master equation.

    Deterministic non-Hermitian evolution until the squared norm reaches the
    next uniform draw, jump time located by bisection (to sample_dt/1000),
    channel chosen proportionally to kappa<a^dag a> vs gamma<sigma_+ sigma_->.
    Bit-reproducible for a fixed seed.
    """
    if abs(psi0.norm - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    prop = _prop if _prop is not None else _JumpPropagator(p)
    rng = np.random.default_rng(seed)
    times = np.arange(0.0, t_final + sample_dt / 2, sample_dt)
    states = np.empty((len(times), p.dims.total_dim), dtype=complex)
    jumps: list[tuple[float, str]] = []
    bisect_tol = sample_dt * 1e-3

    psi = psi0.amp.copy()
    states[0] = psi
    t = 0.0
    r = rng.uniform()
    for k, t_next in enumerate(times[1:], start=1):
        while True:
            trial = prop.advance(psi, t_next - t)
            if np.vdot(trial, trial).real > r:
                psi = trial
                t = t_next
                break
            # the squared norm decreases monotonically: bisect the crossing
            lo, hi = t, t_next
            while hi - lo > bisect_tol:
                mid = 0.5 * (lo + hi)
                if np.vdot(
                    (cand := prop.advance(psi, mid - t)), cand
                ).real > r:
                    lo = mid
                else:
                    hi = mid
            t_jump = 0.5 * (lo + hi)
            psi = prop.advance(psi, t_jump - t)
            t = t_jump
            w_cav = p.kappa * float(np.linalg.norm(prop.a @ psi) ** 2)
            w_tls = p.gamma * float(np.linalg.norm(prop.sm @ psi) ** 2)
            if w_cav + w_tls <= 0:
                raise RuntimeError("jump resolution lost: no decay weight at jump time")
            if rng.uniform() < w_cav / (w_cav + w_tls):
                psi = prop.a @ psi
                channel = "cavity"
            else:
                psi = prop.sm @ psi
                channel = "tls"
            nrm = np.linalg.norm(psi)
            if nrm == 0.0:
                raise RuntimeError("jump resolution lost: state annihilated")
            psi = psi / nrm
            jumps.append((t_jump, channel))
            r = rng.uniform()
        states[k] = psi / np.linalg.norm(psi)
    return TrajectoryRecord(seed=seed, times=times, states=states, jumps=jumps)


def run_trajectories(
    p: ModelParams,
    psi0: StateVector,
    t_final: float,
    sample_dt: float,
    n_trajectories: int,
    base_seed: int,
    threads: int = 1,
) -> list[TrajectoryRecord]:
    """Ensemble with deterministic seeds base_seed + i; result is independent
    of execution order."""
    prop = _JumpPropagator(p)

    def one(i):
        return mcwf_trajectory(p, psi0, t_final, base_seed + i, sample_dt, _prop=prop)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(n_trajectories)))
    return [one(i) for i in range(n_trajectories)]


def trajectory_average(records: list[TrajectoryRecord], observable: Operator):
    """Ensemble mean of <psi|O|psi> over trajectories sharing one sample grid.

    Returns (times, mean, standard_error)."""
    if not records:
        raise ValueError("need at least one trajectory record")
    times = records[0].times
    for rec in records[1:]:
        if not np.array_equal(rec.times, times):
            raise ValueError("trajectory records have mismatched sample grids")
    vals = np.empty((len(records), len(times)))
    for i, rec in enumerate(records):
        vals[i] = np.einsum(
            "ti,ij,tj->t", rec.states.conj(), observable.mat, rec.states
        ).real
    mean = vals.mean(axis=0)
    if len(records) > 1:
        stderr = vals.std(axis=0, ddof=1) / math.sqrt(len(records))
    else:
        stderr = np.zeros_like(mean)
    return times, mean, stderr
