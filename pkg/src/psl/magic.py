"""Magic subspaces and the purity speed limit t_MS = t_o + t_d.

Locates the subspace of fixed diagonal coordinates where the purity
shrinks fastest, evaluates the closed-form off-diagonal purity decay
along it, and integrates the Lagrange-multiplier dynamics on the
diagonal subspace up to the finite-time blow-up that marks arrival at
the zero coherence vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import (
    DegenerateMagicSubspaceError,
    DomainError,
    NoCrossingError,
    SingularMuDynamicsError,
    StuckPointError,
    UnsupportedConfigurationError,
)
from .model import CoherenceState


@dataclass(frozen=True)
class MagicSubspaceMo:
    """Fixed diagonal coordinates s_d^(m) and the decay offset lambda."""

    s_d_m: np.ndarray
    lam: float
    gamma_dephasing: float
    n_levels: int

    @property
    def exists_in_ball(self):
        return float(self.s_d_m @ self.s_d_m) <= 1.0 - 1.0 / self.n_levels


@dataclass(frozen=True)
class MuTrajectory:
    """Multiplier trajectory on the diagonal subspace and its blow-up time."""

    times: np.ndarray
    mu: np.ndarray
    s_d: np.ndarray   # (n_samples, N-1)
    p_d: np.ndarray
    t_d: float


class TmsResult(NamedTuple):
    t_o: float
    t_d: float
    t_ms: float


def _require_uniform_gamma(model, gamma):
    diag = np.diag(model.R_o)
    if np.abs(diag + gamma).max() > 1e-9 * max(1.0, abs(gamma)):
        raise UnsupportedConfigurationError(
            "all effective dephasing rates must equal the given value; "
            "mixed-rate configurations are not supported"
        )


def locate_Mo(model, gamma):
    """Solve (R_d + R_d^T + 2*gamma*I) s_d = -q_d for the subspace location."""
    _require_uniform_gamma(model, gamma)
    rd = model.R_d
    m = rd + rd.T + 2.0 * gamma * np.eye(model.n_diag)
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0 or np.linalg.cond(m) > 1e12:
        raise DegenerateMagicSubspaceError(
            "magic-subspace linear system is singular at this dephasing rate")
    s_d_m = -np.linalg.solve(m, model.q_d)
    lam = float(s_d_m @ model.q_d + 0.5 * s_d_m @ (rd + rd.T) @ s_d_m)
    return MagicSubspaceMo(s_d_m=s_d_m, lam=lam, gamma_dephasing=float(gamma),
                           n_levels=model.n_levels)


def purity_along_Mo(mo, p_o_initial, t):
    """Closed-form p_o(t) = p_o(0) e^{-2 Gamma t} + (lambda/Gamma)(1 - e^{-2 Gamma t})."""
    if p_o_initial < 0:
        raise DomainError("initial off-diagonal purity must be nonnegative")
    g = mo.gamma_dephasing
    decay = np.exp(-2.0 * g * np.asarray(t, dtype=float))
    return p_o_initial * decay + (mo.lam / g) * (1.0 - decay)


def time_to_zero_po(mo, p_o_initial):
    """Time at which p_o reaches zero along the subspace."""
    if p_o_initial <= 0:
        if p_o_initial < 0:
            raise DomainError("initial off-diagonal purity must be nonnegative")
        return 0.0
    if mo.lam >= 0:
        raise NoCrossingError(
            "purity cannot reach zero along this subspace (decay offset "
            f"lambda = {mo.lam:.6g} >= 0)")
    g = mo.gamma_dephasing
    ratio = (mo.lam - g * p_o_initial) / mo.lam
    return float(np.log(ratio) / (2.0 * g))


def mu_ode_rhs(model, mu):
    """Multiplier velocity and the constrained diagonal coordinates at mu."""
    rd = model.R_d
    m = rd + rd.T + 2.0 * mu * np.eye(model.n_diag)
    try:
        s_d = -np.linalg.solve(m, model.q_d)
        minv_s = np.linalg.solve(m, s_d)
    except np.linalg.LinAlgError as exc:
        raise SingularMuDynamicsError(
            f"constraint matrix singular at mu = {mu}", mu=mu) from exc
    p_d = float(s_d @ s_d)
    denom = 4.0 * float(s_d @ minv_s)
    # on the valid branch M is positive definite, so the denominator is
    # positive (it decays like 1/mu^3 but never vanishes)
    if not np.isfinite(denom) or denom <= 0.0:
        raise SingularMuDynamicsError(
            f"multiplier dynamics singular at mu = {mu}", mu=mu)
    dmu_dt = (2.0 * mu * p_d - float(model.q_d @ s_d)) / denom
    return dmu_dt, s_d, p_d


def _check_mu_domain(model, gamma):
    rd = model.R_d
    top = float(np.linalg.eigvalsh(-0.5 * (rd + rd.T)).max())
    if gamma <= top + 1e-12:
        raise SingularMuDynamicsError(
            "the multiplier path from mu(0) = Gamma crosses a singularity; "
            f"Gamma must exceed {top:.6g}", mu=gamma)
    if np.allclose(model.q_d, 0.0):
        raise DegenerateMagicSubspaceError(
            "q_d = 0: the diagonal subspace trajectory is trivial")


def integrate_mu(model, gamma, mu_max=None, pd_floor=1e-12, n_samples=400):
    """Integrate the multiplier dynamics from mu(0) = Gamma to divergence.

    The integration runs in the mu domain (dt/dmu = 1/mu'), which is
    equivalent to adaptive time stepping because mu is monotone here, and
    the finite blow-up time t_d is recovered by polynomial extrapolation
    of t(1/mu) to 1/mu -> 0.
    """
    _require_uniform_gamma(model, gamma)
    _check_mu_domain(model, gamma)
    if mu_max is None:
        mu_max = max(1e8, 1e6 * gamma)

    def dt_dmu(mu, _t):
        dmu_dt, _s, _p_d = mu_ode_rhs(model, float(mu))
        if dmu_dt <= 0:
            raise SingularMuDynamicsError(
                f"multiplier is non-increasing at mu = {mu}", mu=float(mu))
        return 1.0 / dmu_dt

    def pd_floor_event(mu, _t):
        _dmu, _s, p_d = mu_ode_rhs(model, float(mu))
        return p_d - pd_floor

    pd_floor_event.terminal = True
    pd_floor_event.direction = -1

    sol = solve_ivp(dt_dmu, (gamma, mu_max), [0.0], method="DOP853",
                    rtol=1e-12, atol=1e-16, dense_output=True,
                    events=pd_floor_event)
    if not sol.success:
        raise SingularMuDynamicsError(
            f"multiplier integration failed: {sol.message}", mu=float(sol.t[-1]))

    mu_hi = float(sol.t[-1])
    mu_grid = np.geomspace(gamma, mu_hi, n_samples)
    t_grid = sol.sol(mu_grid)[0]
    s_grid = np.empty((n_samples, model.n_diag))
    p_grid = np.empty(n_samples)
    for i, mu in enumerate(mu_grid):
        _, s_d, p_d = mu_ode_rhs(model, mu)
        s_grid[i] = s_d
        p_grid[i] = p_d

    # tail extrapolation: t(mu) = t_d - a/mu - b/mu^2 - ...
    # (nodes stay inside the integration domain; the dense interpolant is
    # unreliable below the starting multiplier)
    nodes = np.geomspace(max(gamma, mu_hi / 32.0), mu_hi, 6)[::-1]
    x = 1.0 / nodes
    y = sol.sol(nodes)[0]
    z = x / x.max()  # rescale for conditioning
    coeffs = np.polynomial.polynomial.polyfit(z, y, 4)
    t_d = float(coeffs[0])

    return MuTrajectory(times=t_grid, mu=mu_grid, s_d=s_grid, p_d=p_grid, t_d=t_d)


def time_on_Md_quadrature(model, gamma):
    """Blow-up time by direct quadrature of dt/dmu over [Gamma, inf)."""
    _require_uniform_gamma(model, gamma)
    _check_mu_domain(model, gamma)

    # substitute u = Gamma/mu so the infinite tail (dt/dmu ~ 1/mu^2)
    # becomes a bounded integrand on (0, 1]
    def integrand(u):
        mu = gamma / u
        dmu_dt, _s, _p = mu_ode_rhs(model, mu)
        return gamma / (dmu_dt * u * u)

    val, _err = quad(integrand, 0.0, 1.0, limit=400)
    return float(val)


def asymptotic_t_ms(gamma):
    """Large-dephasing approximation ln(Gamma)/Gamma of the speed limit."""
    if gamma <= 1.0:
        raise DomainError("asymptotic form requires Gamma > 1")
    return float(np.log(gamma) / gamma)


def t_ms(model, gamma, initial_purity):
    """Speed-limit time for purity `initial_purity` -> maximally mixed.

    The start is placed on the fixed-diagonal subspace at the requested
    total purity; the cost of reaching the subspace is taken as zero.
    """
    mo = locate_Mo(model, gamma)
    p_o0 = initial_purity - 1.0 / model.n_levels - float(mo.s_d_m @ mo.s_d_m)
    if p_o0 < 0:
        raise DomainError(
            "requested purity is below the purity of the subspace location")
    t_o = time_to_zero_po(mo, p_o0)
    t_d = integrate_mu(model, gamma).t_d
    return TmsResult(t_o=t_o, t_d=t_d, t_ms=t_o + t_d)


def mo_control_synthesis(model, mo, state, tol=1e-8):
    """Minimum-norm control amplitudes holding the diagonal coordinates fixed.

    Solves sum_k u_k (A_do^(k) s_o + A_dd^(k) s_d) = -q_d - R_d s_d^(m)
    in the least-squares sense and rejects infeasible states.
    """
    if np.abs(state.s_d - mo.s_d_m).max() > tol:
        raise DomainError("state does not lie on the magic subspace")
    no = model.n_off
    s = state.s
    cols = np.array([ (a @ s)[no:] for a in model.generators ]).T  # (n_diag, N_c)
    rhs = -model.q_d - model.R_d @ state.s_d
    u, *_ = np.linalg.lstsq(cols, rhs, rcond=None)
    if np.linalg.norm(cols @ u - rhs) > 1e-9 * max(1.0, np.linalg.norm(rhs)):
        raise StuckPointError(
            "constraint is infeasible at this state (rank-deficient rows)")
    return u


def propagate_on_Mo(model, mo, initial, t_final, *, rtol=1e-11, atol=1e-13,
                    control_offset=None, n_samples=200):
    """Closed-loop integration along the fixed-diagonal subspace.

    Controls are re-synthesized from the current state at every step.
    `control_offset` optionally maps a state to an extra control vector
    lying in the null space of the constraint rows, used to verify that
    the purity decay does not depend on the particular control solution.
    Returns (trajectory_times, trajectory_states) over [0, t_final].
    """
    r = model.R
    q = model.q

    def controls(s):
        state = CoherenceState.from_vector(model.n_levels, s)
        u = mo_control_synthesis(model, mo, state, tol=1e-5)
        if control_offset is not None:
            u = u + control_offset(s)
        return u

    def rhs(_t, s):
        u = controls(s)
        return (r + np.tensordot(u, model.generators, axes=1)) @ s + q

    times = np.linspace(0.0, float(t_final), n_samples)
    sol = solve_ivp(rhs, (0.0, float(t_final)), initial.s, method="DOP853",
                    rtol=rtol, atol=atol, t_eval=times)
    if not sol.success:
        raise SingularMuDynamicsError(
            "closed-loop propagation on the fixed-diagonal subspace failed")
    return sol.t, sol.y.T


def t_o_by_propagation(model, mo, *, p_o_floor=1e-6, window_factor=0.1,
                       rtol=1e-11, atol=1e-14, max_windows=5000):
    """Off-diagonal descent time measured by direct state propagation.

    Propagates the full density matrix under the synthesized constraint
    controls in short windows.  A single trajectory cannot hold the
    diagonal coordinates all the way to zero off-diagonal purity: the
    controls are unitary, so the spectrum of the density matrix evolves
    only through dissipation, and along the constrained flow it pinches
    against a configuration in which the coherences of the lowest-flux
    pair are forced to vanish and the population constraint rows lose
    rank.  Because the purity decay along the subspace is independent of
    the control solution and of the off-diagonal phase distribution, the
    descent is measured in windows instead: each window starts from the
    canonical state with the current off-diagonal purity — the convex
    mixture f*rho_pure + (1-f)*diag(rho_pure), f = sqrt(p_o/p_o_pure),
    which is positive by construction and keeps every coherence pair
    populated — and runs until the window ends or p_o reaches
    `p_o_floor`.  The accumulated time is returned together with the
    analytic tail from the floor to zero, so t_o ~= hit_time + tail.

    Returns (hit_time, tail, max_diagonal_drift, n_windows).
    """
    basis = model.basis
    no = model.n_off
    mixed = np.full(model.n_levels, 1.0 / model.n_levels)
    pops = mixed.copy()
    for k in range(model.n_diag):
        pops = pops + mo.s_d_m[k] * np.diag(basis.elements[no + k]).real
    if pops.min() < 0.0:
        raise DomainError("magic-subspace populations are not a valid "
                          "probability vector")
    psi = np.sqrt(pops)
    rho_pure = np.outer(psi, psi)
    rho_diag = np.diag(pops).astype(complex)
    from .model import rho_to_coherence  # local import avoids cycle at load
    s_pure = rho_to_coherence(rho_pure, basis).s
    p_o_pure = float(s_pure[:no] @ s_pure[:no])

    def prepare(p_o):
        f = np.sqrt(p_o / p_o_pure)
        return rho_to_coherence(f * rho_pure + (1.0 - f) * rho_diag, basis).s

    r = model.R
    q = model.q
    rhs_fixed = -model.q_d - model.R_d @ mo.s_d_m

    def rhs(_t, s):
        cols = np.array([(a @ s)[no:] for a in model.generators]).T
        u, *_ = np.linalg.lstsq(cols, rhs_fixed, rcond=None)
        return (r + np.tensordot(u, model.generators, axes=1)) @ s + q

    def hit(_t, s):
        return float(s[:no] @ s[:no]) - p_o_floor

    hit.terminal = True
    hit.direction = -1

    p_o = p_o_pure
    t_acc = 0.0
    drift_max = 0.0
    n_windows = 0
    while p_o > p_o_floor:
        if n_windows >= max_windows:
            raise SingularMuDynamicsError(
                "windowed descent did not reach the purity floor")
        h = max(min(0.02, window_factor * p_o), 1e-9)
        sol = solve_ivp(rhs, (0.0, h), prepare(p_o), method="DOP853",
                        rtol=rtol, atol=atol, events=hit)
        if not sol.success:
            raise SingularMuDynamicsError(
                "window propagation failed before the purity floor")
        n_windows += 1
        if len(sol.t_events[0]):
            t_acc += float(sol.t_events[0][0])
            s_end = sol.y_events[0][0]
        else:
            t_acc += h
            s_end = sol.y[:, -1]
        drift_max = max(drift_max, float(np.abs(s_end[no:] - mo.s_d_m).max()))
        p_o = float(s_end[:no] @ s_end[:no])
    gam = mo.gamma_dephasing
    tail = float(np.log((mo.lam - gam * p_o_floor) / mo.lam) / (2.0 * gam))
    return t_acc, tail, drift_max, n_windows
