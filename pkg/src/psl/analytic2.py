"""Closed-form two-level solutions: magic plane, segment times, multiplier.

These serve as exact oracles for the generic N-level machinery and
generate the three-segment time-optimal Bloch trajectory from the
equilibrium point to the center of the ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMagicSubspaceError, DivergenceError, DomainError, NoCrossingError
from .model import RelaxationSpec


@dataclass(frozen=True)
class TwoLevelParams:
    """Two-level rates: gamma_plus = g12 + g21, gamma_minus = g12 - g21."""

    gamma_plus: float
    gamma_minus: float
    Gamma: float

    def __post_init__(self):
        if self.gamma_plus <= 0:
            raise DomainError("gamma_plus must be positive")
        if abs(self.gamma_minus) > self.gamma_plus + 1e-14:
            raise DomainError("|gamma_minus| cannot exceed gamma_plus")
        if self.Gamma < self.gamma_plus / 2 - 1e-14:
            raise DomainError("Gamma must be at least gamma_plus / 2")

    @property
    def s3_equilibrium(self):
        return self.gamma_minus / self.gamma_plus

    def to_relaxation_spec(self):
        g12 = 0.5 * (self.gamma_plus + self.gamma_minus)
        g21 = 0.5 * (self.gamma_plus - self.gamma_minus)
        deph = self.Gamma - 0.5 * self.gamma_plus
        return RelaxationSpec(
            2,
            np.array([[0.0, g12], [g21, 0.0]]),
            np.array([[0.0, deph], [deph, 0.0]]),
        )


def magic_plane(params):
    """Plane height s_3^(m) = -gamma_minus / (2 (Gamma - gamma_plus)).

    Returns (s3_m, in_ball).
    """
    if abs(params.Gamma - params.gamma_plus) < 1e-14:
        raise DegenerateMagicSubspaceError(
            "magic plane is at infinity for Gamma = gamma_plus")
    s3_m = -params.gamma_minus / (2.0 * (params.Gamma - params.gamma_plus))
    return s3_m, abs(s3_m) <= 1.0


def _lambda_offset(params):
    s3_m, _ = magic_plane(params)
    return (params.gamma_minus - params.gamma_plus * s3_m) * s3_m, s3_m


def t_o_closed(params, p_o_initial):
    """Time for the in-plane purity to reach zero, from the exact decay
    p_o' = -2 Gamma p_o + 2 lambda with lambda = (gamma_- - gamma_+ s3m) s3m."""
    if p_o_initial < 0:
        raise DomainError("p_o_initial must be nonnegative")
    if params.gamma_minus == 0:
        raise DegenerateMagicSubspaceError(
            "gamma_minus = 0: lambda vanishes and the in-plane purity "
            "cannot reach zero")
    lam, _ = _lambda_offset(params)
    if lam >= 0:
        raise NoCrossingError(f"lambda = {lam:.6g} >= 0; no zero crossing")
    if p_o_initial == 0:
        return 0.0
    g = params.Gamma
    return float(np.log((lam - g * p_o_initial) / lam) / (2.0 * g))


def t_d_closed(params):
    """Drift time along the s_3 axis from the plane height to the origin."""
    gp, g = params.gamma_plus, params.Gamma
    if g <= gp:
        raise DomainError("the concatenated strategy requires Gamma > gamma_plus")
    return float(np.log((2 * g - gp) / (2.0 * (g - gp))) / gp)


def mu_closed(params, t):
    """Closed-form multiplier mu(t) on the axis segment, mu(0) = Gamma."""
    gp, g = params.gamma_plus, params.Gamma
    t_d = t_d_closed(params)
    if t >= t_d:
        raise DivergenceError(
            f"mu(t) diverges at t_d = {t_d:.12g}", t_d=t_d)
    e = np.exp(gp * t)
    num = gp * (2 * g - gp) - gp * (g - gp) * e
    den = (2 * g - gp) - 2.0 * (g - gp) * e
    return float(num / den)


def t_ms_two_level(params, p_o_initial=None):
    """t_o + t_d for the equilibrium-to-center problem (or a given p_o(0))."""
    s3_m, _ = magic_plane(params)
    if p_o_initial is None:
        p_o_initial = params.s3_equilibrium ** 2 - s3_m ** 2
    t_o = t_o_closed(params, p_o_initial)
    t_d = t_d_closed(params)
    return t_o, t_d, t_o + t_d


@dataclass(frozen=True)
class TwoLevelTrajectory:
    """Sampled three-segment Bloch path with controls and segment labels."""

    times: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    segment: np.ndarray  # 1 = rotation, 2 = in-plane, 3 = axis drift
    t_o: float
    t_d: float

    def to_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("t,s1,s2,s3,u1,u2,segment\n")
            for row in zip(self.times, self.s1, self.s2, self.s3,
                           self.u1, self.u2, self.segment):
                cells = [f"{v:.15g}" for v in row[:-1]] + [str(int(row[-1]))]
                fh.write(",".join(cells) + "\n")


def synthesize_trajectory(params, samples=200, rotation_duration=0.0):
    """Concatenated time-optimal path from equilibrium to the center.

    Segment 1 is the (idealized) instantaneous rotation onto the magic
    plane at constant radius; set ``rotation_duration`` > 0 to render it
    as a finite fast rotation for plotting.  Segment 2 spirals in-plane
    with u2 = (gamma_- - gamma_+ s3m)/s1; segment 3 drifts along the axis.
    """
    flip = params.gamma_minus < 0
    p = params if not flip else TwoLevelParams(
        params.gamma_plus, -params.gamma_minus, params.Gamma)
    gp, gm, g = p.gamma_plus, p.gamma_minus, p.Gamma
    if g <= gp:
        raise DomainError("trajectory synthesis requires Gamma > gamma_plus")
    s3_e = p.s3_equilibrium
    if s3_e == 0.0:
        return TwoLevelTrajectory(*(np.array([]) for _ in range(7)),
                                  t_o=0.0, t_d=0.0)
    s3_m, _ = magic_plane(p)
    if abs(s3_m) > abs(s3_e):
        raise DomainError("magic plane lies outside the initial purity sphere")

    p_o0 = s3_e ** 2 - s3_m ** 2
    lam, _ = _lambda_offset(p)
    t_o = t_o_closed(p, p_o0)
    t_d = t_d_closed(p)
    s1_0 = np.sqrt(p_o0)

    t_list, s1_l, s2_l, s3_l, u1_l, u2_l, seg_l = ([] for _ in range(7))

    # segment 1: rotation at constant radius about the s2 axis
    n1 = max(2, samples // 10)
    theta0 = np.arctan2(0.0, s3_e)
    theta1 = np.arctan2(s1_0, s3_m)
    radius = abs(s3_e)
    if rotation_duration > 0:
        omega = (theta1 - theta0) / rotation_duration
        ts = np.linspace(0.0, rotation_duration, n1)
    else:
        omega = np.inf
        ts = np.zeros(n1)
    thetas = np.linspace(theta0, theta1, n1)
    for t, th in zip(ts, thetas):
        t_list.append(t)
        s1_l.append(radius * np.sin(th))
        s2_l.append(0.0)
        s3_l.append(radius * np.cos(th))
        u1_l.append(0.0)
        u2_l.append(-omega if rotation_duration > 0 else np.inf)
        seg_l.append(1)
    t1 = rotation_duration

    # segment 2: in-plane spiral, s2 stays zero, s1 = sqrt(p_o(t))
    c = gm - gp * s3_m
    ts2 = np.linspace(0.0, t_o, samples)
    for t in ts2:
        p_o = max((p_o0 - lam / g) * np.exp(-2 * g * t) + lam / g, 0.0)
        s1 = np.sqrt(p_o)
        t_list.append(t1 + t)
        s1_l.append(s1)
        s2_l.append(0.0)
        s3_l.append(s3_m)
        u1_l.append(0.0)
        u2_l.append(c / s1 if s1 > 1e-300 else np.nan)
        seg_l.append(2)

    # segment 3: free drift along the axis to the origin
    ts3 = np.linspace(0.0, t_d, samples)
    for t in ts3:
        t_list.append(t1 + t_o + t)
        s1_l.append(0.0)
        s2_l.append(0.0)
        s3_l.append(s3_e + (s3_m - s3_e) * np.exp(-gp * t))
        u1_l.append(0.0)
        u2_l.append(0.0)
        seg_l.append(3)

    sign = -1.0 if flip else 1.0
    return TwoLevelTrajectory(
        times=np.array(t_list),
        s1=np.array(s1_l),
        s2=np.array(s2_l),
        s3=sign * np.array(s3_l),
        u1=np.array(u1_l),
        u2=sign * np.array(u2_l),
        segment=np.array(seg_l, dtype=int),
        t_o=t_o, t_d=t_d,
    )
