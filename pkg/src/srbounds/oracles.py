"""Independent numerical baselines for cross-validating SDP bounds.

Three routes to the observables (P, a1, b1) of the forced double well:

  * :func:`em_simulate` - ensemble Euler-Maruyama paths with per-path
    counter-based RNG substreams (Philox), bit-reproducible under a seed;
  * :func:`fp_solve` - method-of-lines Fokker-Planck evolution with a
    conservative Crank-Nicolson scheme and zero-flux boundaries;
  * :func:`boltzmann_moments` - exact stationary moments for A = 0 by
    adaptive quadrature of exp(-V/D).

These stay independent of the sdp module on purpose: they are the oracle
side of every dual-route check in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.integrate import quad
from scipy.linalg import solve_banded

from .model import ForcedDoubleWellParams


class OracleInstabilityError(RuntimeError):
    """A simulation left its validity envelope (divergent paths, mass loss)."""


@dataclass(frozen=True)
class EmSettings:
    """Euler-Maruyama ensemble settings.

    The averaging window (t_end - burn_in) must be a whole number of forcing
    periods so that time averages correspond to stationary expectations.
    """

    dt: float
    t_end: float
    n_paths: int
    burn_in: float
    seed: int
    x0: float = 1.0
    chunk_steps: int = 65536
    guard: float = 1e6

    @classmethod
    def defaults(cls, Omega: float, periods: int = 392, burn_periods: int = 8,
                 n_paths: int = 100, seed: int = 0, dt_target: float = 1e-3) -> "EmSettings":
        """Defaults near dt = 1e-3 with dt snapped to divide the period."""
        t_period = 2.0 * math.pi / float(Omega)
        dt = t_period / round(t_period / dt_target)
        burn_in = burn_periods * t_period
        return cls(dt=dt, t_end=burn_in + periods * t_period,
                   n_paths=n_paths, burn_in=burn_in, seed=seed)

    def to_dict(self) -> dict:
        return {"dt": self.dt, "t_end": self.t_end, "n_paths": self.n_paths,
                "burn_in": self.burn_in, "seed": self.seed, "x0": self.x0}


@dataclass(frozen=True)
class FpSettings:
    """Fokker-Planck method-of-lines settings.

    The density starts as a normalized Gaussian (``init_center``,
    ``init_width``); the run extends past ``t_end`` in whole periods until
    the per-period observables settle below ``equil_tol``, up to ``t_cap``.
    """

    x_min: float = -5.0
    x_max: float = 5.0
    n_grid: int = 2001
    t_end: float = 100.0
    steps_per_period: int = 2048
    equil_tol: float = 1e-6
    t_cap: float = 400.0
    mass_tol: float = 1e-8
    init_center: float = 0.0
    init_width: float = 1.0

    def __post_init__(self):
        if self.x_min >= self.x_max:
            raise ValueError("x_min must be < x_max")
        if self.n_grid < 3:
            raise ValueError("n_grid must be >= 3")

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_grid": self.n_grid,
                "t_end": self.t_end, "steps_per_period": self.steps_per_period,
                "equil_tol": self.equil_tol, "t_cap": self.t_cap,
                "init_center": self.init_center, "init_width": self.init_width}


@dataclass(frozen=True)
class OracleEstimate:
    """Estimated (P, a1, b1) with method-specific error information."""

    method: str
    P: float
    a1: float
    b1: float
    std_err: dict | None = None       # EM: across-path standard errors
    error_proxy: dict | None = None   # FP: two-resolution difference
    converged: bool = True
    settings: dict = field(default_factory=dict)

    @property
    def B2(self) -> float:
        return self.a1**2 + self.b1**2

    @property
    def R(self) -> float:
        return self.B2 / self.P

    def to_dict(self) -> dict:
        return {"method": self.method, "P": self.P, "a1": self.a1, "b1": self.b1,
                "B2": self.B2, "R": self.R, "std_err": self.std_err,
                "error_proxy": self.error_proxy, "converged": self.converged,
                "settings": self.settings}


# ---------------------------------------------------------------------------
# Fourier projection


def fourier_project(t: np.ndarray, mean_x: np.ndarray, Omega: float) -> tuple[float, float]:
    """First-harmonic projections (a1, b1) of <X(t)> over exactly one period.

    a1 = (1/T) * integral cos(Omega t) <X(t)> dt, b1 likewise with sin,
    by trapezoidal quadrature on a uniform grid spanning one period.
    """
    t = np.asarray(t, dtype=float)
    mean_x = np.asarray(mean_x, dtype=float)
    if t.ndim != 1 or t.shape != mean_x.shape or len(t) < 3:
        raise ValueError("need matching 1-D sample arrays with at least 3 points")
    steps = np.diff(t)
    if steps.min() <= 0 or np.ptp(steps) > 1e-9 * steps.mean():
        raise ValueError("samples must be uniform and increasing")
    t_period = 2.0 * math.pi / float(Omega)
    if abs((t[-1] - t[0]) - t_period) > 1e-9 * t_period:
        raise ValueError("samples must cover exactly one forcing period")
    a1 = np.trapezoid(np.cos(Omega * t) * mean_x, t) / t_period
    b1 = np.trapezoid(np.sin(Omega * t) * mean_x, t) / t_period
    return float(a1), float(b1)


# ---------------------------------------------------------------------------
# Boltzmann quadrature (A = 0 stationary density)


def boltzmann_moments(D, orders) -> dict[int, float]:
    """Stationary moments <x^k> of exp(-V(x)/D)/Z for the unforced well.

    V(x) = -x^2/2 + x^4/4; adaptive quadrature on [-8, 8] to relative
    accuracy 1e-10.  Odd orders vanish by symmetry and are rejected.
    """
    D = float(D)
    if D <= 0:
        raise ValueError("D must be > 0")
    orders = sorted(set(int(k) for k in orders))
    if any(k < 0 or k % 2 for k in orders):
        raise ValueError(f"orders must be non-negative even integers, got {orders}")

    def weight(x):
        return math.exp((x * x / 2 - x**4 / 4) / D)

    z, _ = quad(weight, -8, 8, epsabs=0, epsrel=1e-12, limit=200)
    out = {}
    for k in orders:
        num, _ = quad(lambda x: x**k * weight(x), -8, 8, epsabs=0, epsrel=1e-12, limit=200)
        out[k] = num / z
    return out


# ---------------------------------------------------------------------------
# Euler-Maruyama ensemble


@njit(cache=True)
def _em_chunk(x, noise, step0, dt, A, Omega, D, accumulate, acc, guard):
    """Advance all paths through one chunk of steps; fixed summation order.

    acc rows: sums of x^2, x*cos(Omega t), x*sin(Omega t) over accumulated
    steps (left-endpoint sums; exact to O(dt^2) for periodic averages).
    Time is derived from the global step index so results are independent
    of how the run is chunked.  Returns False when any path exceeds the
    guard.
    """
    n_steps = noise.shape[1]
    amp = math.sqrt(2.0 * D * dt)
    for k in range(n_steps):
        t = (step0 + k) * dt
        force = A * math.cos(Omega * t)
        if accumulate:
            c = math.cos(Omega * t)
            s = math.sin(Omega * t)
            for p in range(x.shape[0]):
                xp = x[p]
                acc[0, p] += xp * xp
                acc[1, p] += xp * c
                acc[2, p] += xp * s
        for p in range(x.shape[0]):
            xp = x[p]
            x[p] = xp + (xp - xp * xp * xp + force) * dt + amp * noise[p, k]
            if abs(x[p]) > guard:
                return False
    return True


def em_simulate(params: ForcedDoubleWellParams, settings: EmSettings) -> OracleEstimate:
    """Ensemble Euler-Maruyama estimate of (P, a1, b1).

    Paths are independent with per-path Philox substreams
    (``Philox(seed).jumped(path)``), so results are bit-reproducible for a
    fixed seed regardless of chunking.
    """
    Omega = float(params.Omega)
    A = float(params.A)
    D = float(params.D)
    t_period = 2.0 * math.pi / Omega
    if settings.dt <= 0:
        raise ValueError("dt must be > 0")
    if not settings.burn_in < settings.t_end:
        raise ValueError("burn_in must be < t_end")
    if settings.n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    window = settings.t_end - settings.burn_in
    n_periods = window / t_period
    if abs(n_periods - round(n_periods)) > 1e-6:
        raise ValueError("(t_end - burn_in) must be a whole number of forcing periods")

    dt = settings.dt
    n_burn = round(settings.burn_in / dt)
    n_total = round(settings.t_end / dt)
    n_window = n_total - n_burn
    n_paths = settings.n_paths

    rngs = [np.random.Generator(np.random.Philox(key=settings.seed).jumped(p))
            for p in range(n_paths)]
    x = np.full(n_paths, float(settings.x0))
    acc = np.zeros((3, n_paths))
    step = 0
    while step < n_total:
        chunk = min(settings.chunk_steps, n_total - step)
        if step < n_burn < step + chunk:
            chunk = n_burn - step  # split so accumulation starts exactly at burn_in
        noise = np.empty((n_paths, chunk))
        for p, rng in enumerate(rngs):
            noise[p] = rng.standard_normal(chunk)
        ok = _em_chunk(x, noise, step, dt, A, Omega, D,
                       step >= n_burn, acc, settings.guard)
        if not ok:
            raise OracleInstabilityError(
                f"path diverged (|x| > {settings.guard:g}); decrease dt")
        step += chunk

    per_path = acc / n_window  # time averages of x^2, x cos, x sin per path
    means = per_path.mean(axis=1)
    errs = per_path.std(axis=1, ddof=1) / math.sqrt(n_paths)
    return OracleEstimate(
        method="em",
        P=float(means[0]), a1=float(means[1]), b1=float(means[2]),
        std_err={"P": float(errs[0]), "a1": float(errs[1]), "b1": float(errs[2])},
        settings={"params": params.to_dict(), **settings.to_dict()})


# ---------------------------------------------------------------------------
# Fokker-Planck method of lines


def _fp_operators(x: np.ndarray, D: float) -> tuple[np.ndarray, np.ndarray]:
    """Banded tridiagonal operators L0, L1 with p' = (L0 + cos(Omega t) A L1) p.

    Conservative flux discretization with zero-flux faces: the column sums of
    both operators vanish, so cell mass is conserved to rounding error.
    L1 carries the unit forcing; the caller scales it by A cos(Omega t).
    """
    n = len(x)
    dx = x[1] - x[0]
    xm = 0.5 * (x[:-1] + x[1:])      # interior faces
    drift = xm - xm**3               # -V'(x) at faces
    # banded storage rows: upper, diagonal, lower
    L0 = np.zeros((3, n))
    L1 = np.zeros((3, n))
    # flux at face i+1/2: J = drift*(p_i + p_{i+1})/2 - D*(p_{i+1} - p_i)/dx
    # dp_i/dt = -(J_{i+1/2} - J_{i-1/2})/dx
    adv = drift / (2.0 * dx)
    dif = D / dx**2
    # contribution of face i+1/2 to rows i and i+1
    L0[1, :-1] += -adv - dif          # d p_i'/d p_i
    L0[0, 1:] += -adv + dif           # d p_i'/d p_{i+1}
    L0[1, 1:] += adv - dif            # d p_{i+1}'/d p_{i+1}
    L0[2, :-1] += adv + dif           # d p_{i+1}'/d p_i
    frc = 1.0 / (2.0 * dx)
    L1[1, :-1] += -frc
    L1[0, 1:] += -frc
    L1[1, 1:] += frc
    L1[2, :-1] += frc
    return L0, L1


def _banded_matvec(L: np.ndarray, p: np.ndarray) -> np.ndarray:
    out = L[1] * p
    out[:-1] += L[0, 1:] * p[1:]
    out[1:] += L[2, :-1] * p[:-1]
    return out


def _fp_run(params: ForcedDoubleWellParams, settings: FpSettings,
            n_grid: int) -> tuple[float, float, float, bool, dict]:
    Omega = float(params.Omega)
    A = float(params.A)
    D = float(params.D)
    t_period = 2.0 * math.pi / Omega
    x = np.linspace(settings.x_min, settings.x_max, n_grid)
    dx = x[1] - x[0]
    p = np.exp(-0.5 * ((x - settings.init_center) / settings.init_width) ** 2)
    # normalize by the discrete mass the flux scheme conserves exactly
    p /= p.sum() * dx
    L0, L1 = _fp_operators(x, D)

    n_sub = settings.steps_per_period
    dt = t_period / n_sub
    min_periods = max(2, math.ceil(settings.t_end / t_period))
    max_periods = max(min_periods, math.ceil(settings.t_cap / t_period))

    prev_obs = None
    converged = False
    healthy = True
    period = 0
    mean_x = np.empty(n_sub + 1)
    mean_x2 = np.empty(n_sub + 1)
    tgrid = np.empty(n_sub + 1)
    while period < max_periods:
        t0 = period * t_period
        mean_x[0] = np.trapezoid(x * p, x)
        mean_x2[0] = np.trapezoid(x * x * p, x)
        tgrid[0] = t0
        for k in range(n_sub):
            t_mid = t0 + (k + 0.5) * dt
            c = A * math.cos(Omega * t_mid)
            L = L0 + c * L1
            # Crank-Nicolson in increment form: (I - dt/2 L) delta = dt L p.
            # Solving for the increment keeps the rounding error of each step
            # proportional to delta, so mass is conserved to ~1e-12 overall.
            M = -0.5 * dt * L
            M[1] += 1.0
            delta = solve_banded((1, 1), M, dt * _banded_matvec(L, p))
            p = p + delta
            tgrid[k + 1] = t0 + (k + 1) * dt
            mean_x[k + 1] = np.trapezoid(x * p, x)
            mean_x2[k + 1] = np.trapezoid(x * x * p, x)
        period += 1
        mass = p.sum() * dx
        if abs(mass - 1.0) > settings.mass_tol:
            healthy = False  # mass drift is sticky: the evolution is untrustworthy
        negative = bool(p.min() < -1e-10)  # judged at the reported period only;
        # Crank-Nicolson transients may undershoot early and then decay
        a1, b1 = fourier_project(tgrid, mean_x, Omega)
        P = np.trapezoid(mean_x2, tgrid) / t_period
        obs = (P, a1, b1)
        if prev_obs is not None and period >= min_periods:
            if max(abs(u - v) for u, v in zip(obs, prev_obs)) < settings.equil_tol:
                converged = True
                break
        prev_obs = obs
    extras = {"t_final": period * t_period, "mass": float(p.sum() * dx),
              "x": x, "density": p, "t": tgrid.copy(),
              "mean_x": mean_x.copy(), "mean_x2": mean_x2.copy()}
    return P, a1, b1, converged and healthy and not negative, extras


def fp_solve(params: ForcedDoubleWellParams, settings: FpSettings | None = None,
             return_extras: bool = False):
    """Fokker-Planck estimate of (P, a1, b1) over the final forcing period.

    Runs at the requested resolution and at roughly half resolution; the
    absolute difference is reported as the discretization-error proxy.
    """
    settings = settings or FpSettings()
    P, a1, b1, ok, extras = _fp_run(params, settings, settings.n_grid)
    n_coarse = (settings.n_grid - 1) // 2 + 1
    Pc, a1c, b1c, _, _ = _fp_run(params, settings, n_coarse)
    proxy = {"P": abs(P - Pc), "a1": abs(a1 - a1c), "b1": abs(b1 - b1c)}
    estimate = OracleEstimate(
        method="fp", P=P, a1=a1, b1=b1, error_proxy=proxy, converged=ok,
        settings={"params": params.to_dict(), **settings.to_dict()})
    if return_extras:
        return estimate, extras
    return estimate
