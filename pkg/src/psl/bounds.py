"""Hilbert- and Liouville-space purity speed limits.

Both bounds are ratios of the log purity change to a norm of the
dissipative generator: the Hilbert bound uses the absolute sum of the
generator coefficients in a traceless operator basis, the Liouville
bound the spectral norm of the anti-Hermitian part of the vectorized
generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidRatesError, UnsupportedConfigurationError
from .model import build_pauli_basis, dissipator_matrix, jump_operators


@dataclass(frozen=True)
class AMatrix:
    """Coefficient matrix of the dissipator in a declared operator basis."""

    n_levels: int
    entries: np.ndarray
    basis_tag: str  # "normalized_pauli" | "diagonal_lindblad"

    def __post_init__(self):
        w = np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))
        if w.min() < -1e-10 * max(1.0, abs(w).max()):
            raise InvalidRatesError(
                f"coefficient matrix is not positive semidefinite "
                f"(min eig {w.min():.3e})")

    @property
    def abs_sum(self):
        return float(np.abs(self.entries).sum())


@dataclass(frozen=True)
class BoundReport:
    """Speed-limit times and diagnostics for one rate configuration."""

    t_H: float
    t_L: float
    spectral_norm: float
    log_purity_ratio: float
    t_H_diagonal_basis: Optional[float] = None


def build_a_matrix(spec, basis_tag="normalized_pauli"):
    """Coefficient matrix from expanding the jump operators in the basis."""
    n = spec.n_levels
    ops = jump_operators(spec)
    if basis_tag == "diagonal_lindblad":
        rates = np.zeros(n * n - 1)
        norms = np.zeros(n * n - 1)
        for k, (rate, op) in enumerate(ops):
            rates[k] = rate * float(np.trace(op.conj().T @ op).real)
        entries = np.diag(rates)
        return AMatrix(n_levels=n, entries=entries.astype(complex),
                       basis_tag=basis_tag)
    if basis_tag != "normalized_pauli":
        raise ValueError(f"unknown basis tag {basis_tag!r}")
    basis = build_pauli_basis(n)
    v = basis.elements
    a = np.zeros((basis.size, basis.size), dtype=complex)
    for rate, op in ops:
        c = np.einsum("kij,ji->k", v, op)
        a += rate * np.outer(c, c.conj())
    return AMatrix(n_levels=n, entries=a, basis_tag=basis_tag)


def reference_a_matrix_two_level(spec):
    """Hand-derived two-level coefficient matrix in the (x, y, z) order."""
    if spec.n_levels != 2:
        raise UnsupportedConfigurationError("reference form is for N = 2")
    g12, g21 = spec.gamma[0, 1], spec.gamma[1, 0]
    gp, gm = g12 + g21, g12 - g21
    big_gamma = spec.effective_dephasing[0, 1]
    return np.array([
        [gp / 2, -1j * gm / 2, 0],
        [1j * gm / 2, gp / 2, 0],
        [0, 0, big_gamma - gp / 2],
    ])


def reference_a_matrix_three_level(spec):
    """Hand-derived three-level coefficient matrix (uniform dephasing).

    Basis order (x12, y12, x13, y13, x23, y23, z1, z2).
    """
    if spec.n_levels != 3:
        raise UnsupportedConfigurationError("reference form is for N = 3")
    big_gamma = spec.uniform_gamma()
    if big_gamma is None:
        raise UnsupportedConfigurationError(
            "reference form assumes equal effective dephasing rates")
    g = spec.gamma
    a_p, a_m = g[0, 1] + g[1, 0], g[0, 1] - g[1, 0]
    b_p, b_m = g[0, 2] + g[2, 0], g[0, 2] - g[2, 0]
    c_p, c_m = g[1, 2] + g[2, 1], g[1, 2] - g[2, 1]
    w = 0.5 * (a_p + g[2, 1] + g[2, 0])
    y = (a_p + g[2, 0] + g[2, 1]) / 6.0 + 2.0 * (g[0, 2] + g[1, 2]) / 3.0
    x = np.sqrt(3.0) / 6.0 * (a_m - g[2, 0] + g[2, 1])
    a = np.zeros((8, 8), dtype=complex)
    for base, (p, m) in ((0, (a_p, a_m)), (2, (b_p, b_m)), (4, (c_p, c_m))):
        a[base, base] = a[base + 1, base + 1] = p / 2
        a[base, base + 1] = -1j * m / 2
        a[base + 1, base] = 1j * m / 2
    a[6, 6] = big_gamma - w
    a[7, 7] = big_gamma - y
    a[6, 7] = a[7, 6] = x
    return a


def t_hilbert(a, p_initial, p_final, basis=None):
    """Hilbert-space bound |ln(p_f/p_i)| / (4 sum |a_kl| |V_k| |V_l|)."""
    if not (0 < p_initial <= 1 and 0 < p_final <= 1):
        raise ValueError("purities must lie in (0, 1]")
    if basis is not None:
        norms = np.array([np.sqrt(np.trace(v.conj().T @ v).real)
                          for v in basis.elements])
    else:
        norms = np.ones(a.entries.shape[0])
    denom = 4.0 * float(norms @ np.abs(a.entries) @ norms)
    num = abs(np.log(p_final / p_initial))
    if denom == 0.0:
        return np.inf
    return num / denom


def t_hilbert_diagonal_basis(spec, p_initial, p_final):
    """Two-level bound evaluated in the diagonal jump-operator basis.

    Demonstrates the basis dependence of the Hilbert bound: the
    denominator is 4*Gamma + gamma_plus/2 instead of the Pauli-basis
    4*(Gamma + gamma_plus/2 + |gamma_minus|).
    """
    if spec.n_levels != 2:
        raise UnsupportedConfigurationError("diagonal-basis form is for N = 2")
    gp = spec.gamma[0, 1] + spec.gamma[1, 0]
    big_gamma = spec.effective_dephasing[0, 1]
    denom = 4.0 * big_gamma + gp / 2.0
    if denom == 0.0:
        return np.inf
    return abs(np.log(p_final / p_initial)) / denom


def liouville_antihermitian_part(spec):
    """The matrix i(S + S^dagger) whose spectral norm enters the bound,
    where S is the vectorized dissipator."""
    s = dissipator_matrix(spec)
    return 1j * (s + s.conj().T)


def t_liouville(spec, p_initial, p_final):
    """Liouville-space bound; returns (time, spectral_norm)."""
    s = dissipator_matrix(spec)
    herm = s + s.conj().T  # Hermitian; i*herm is the anti-Hermitian part
    w = np.linalg.eigvalsh(herm)
    sn = float(np.abs(w).max())
    num = abs(np.log(p_final / p_initial))
    t = np.inf if sn == 0.0 else num / sn
    return t, sn


def asymptotic_bounds(n_levels, gamma):
    """Large-dephasing limits (t_H, t_L) = (ln N / 2^N Gamma, ln N / 2 Gamma)."""
    if gamma <= 0:
        raise ValueError("Gamma must be positive")
    ln_n = np.log(n_levels)
    return ln_n / (2 ** n_levels * gamma), ln_n / (2.0 * gamma)


def bound_report(spec, p_initial=None, p_final=None):
    """Full report with pure -> maximally-mixed defaults."""
    n = spec.n_levels
    if p_initial is None:
        p_initial = 1.0
    if p_final is None:
        p_final = 1.0 / n
    a = build_a_matrix(spec)
    t_h = t_hilbert(a, p_initial, p_final)
    t_l, sn = t_liouville(spec, p_initial, p_final)
    t_h_diag = t_hilbert_diagonal_basis(spec, p_initial, p_final) if n == 2 else None
    return BoundReport(
        t_H=t_h,
        t_L=t_l,
        spectral_norm=sn,
        log_purity_ratio=abs(np.log(p_final / p_initial)),
        t_H_diagonal_basis=t_h_diag,
    )
