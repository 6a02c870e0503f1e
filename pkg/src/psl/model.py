"""Coherence-vector representation of dissipative N-level systems.

Builds the generalized Pauli basis, maps density matrices to coherence
vectors and back, assembles the relaxation drift (R, q) and the control
generators A^(k), and propagates the resulting bilinear system with
piecewise-constant controls.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    InvalidDimensionError,
    InvalidRatesError,
    InvalidStateError,
    PositivityWarning,
    StiffnessError,
)

_BLOCK_TOL = 1e-12


# ----------------------------------------------------------------------
# Relaxation rates
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RelaxationSpec:
    """Population relaxation and pure-dephasing rates of an N-level system.

    ``gamma[i][j]`` is the population relaxation rate from level j to
    level i (zero diagonal).  ``pure_dephasing[i][j]`` is the symmetric
    pure-dephasing rate of the (i, j) coherence.  The effective dephasing
    rate of coherence (i, j) is the pure-dephasing rate plus half the sum
    of the total population outflow of levels i and j.
    """

    n_levels: int
    gamma: np.ndarray
    pure_dephasing: np.ndarray
    effective_dephasing: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n_levels
        if n < 2:
            raise InvalidDimensionError(f"n_levels must be >= 2, got {n}")
        gamma = np.asarray(self.gamma, dtype=float)
        deph = np.asarray(self.pure_dephasing, dtype=float)
        if gamma.shape != (n, n) or deph.shape != (n, n):
            raise InvalidRatesError("rate matrices must be (N, N)")
        if not (np.all(np.isfinite(gamma)) and np.all(np.isfinite(deph))):
            raise InvalidRatesError("rates must be finite")
        if np.any(gamma < 0) or np.any(deph < 0):
            raise InvalidRatesError("rates must be nonnegative")
        if np.any(np.diag(gamma) != 0) or np.any(np.diag(deph) != 0):
            raise InvalidRatesError("rate matrices must have zero diagonal")
        if not np.allclose(deph, deph.T, atol=1e-14):
            raise InvalidRatesError("pure_dephasing must be symmetric")
        gamma = gamma.copy()
        deph = 0.5 * (deph + deph.T)
        gamma.setflags(write=False)
        deph.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "pure_dephasing", deph)

        out = gamma.sum(axis=0)  # total outflow of each level
        eff = deph + 0.5 * (out[:, None] + out[None, :])
        np.fill_diagonal(eff, 0.0)
        eff.setflags(write=False)
        object.__setattr__(self, "effective_dephasing", eff)

        if n == 3:
            _check_dephasing_triangle(deph)
        # General realizability: the pure-dephasing matrix must embed as
        # squared pairwise distances (checked again when the diagonal jump
        # operators are constructed).
        _dephasing_gram(deph)

    @classmethod
    def uniform_dephasing(cls, n_levels, gamma, big_gamma):
        """Spec with all effective dephasing rates equal to ``big_gamma``."""
        gamma = np.asarray(gamma, dtype=float)
        out = gamma.sum(axis=0)
        deph = big_gamma - 0.5 * (out[:, None] + out[None, :])
        np.fill_diagonal(deph, 0.0)
        if np.any(deph < -1e-12):
            raise InvalidRatesError(
                "requested uniform dephasing rate is below the decay induced "
                "by the population rates"
            )
        deph = np.clip(deph, 0.0, None)
        return cls(n_levels, gamma, deph)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        n = int(data["n_levels"])
        return cls(n, np.array(data["gamma"], dtype=float),
                   np.array(data["pure_dephasing"], dtype=float))

    def to_json(self):
        return json.dumps({
            "n_levels": self.n_levels,
            "gamma": self.gamma.tolist(),
            "pure_dephasing": self.pure_dephasing.tolist(),
        })

    @property
    def max_rate(self):
        return max(float(self.gamma.max()), float(self.effective_dephasing.max()))

    def uniform_gamma(self, tol=1e-9):
        """The common effective dephasing rate, or None if rates differ."""
        n = self.n_levels
        vals = self.effective_dephasing[~np.eye(n, dtype=bool)]
        g = float(vals[0])
        scale = max(1.0, abs(g))
        if np.all(np.abs(vals - g) <= tol * scale):
            return g
        return None


def _check_dephasing_triangle(deph):
    """Three-level realizability: the square roots of the pairwise
    pure-dephasing rates must satisfy the triangle inequality."""
    r12, r13, r23 = np.sqrt(deph[0, 1]), np.sqrt(deph[0, 2]), np.sqrt(deph[1, 2])
    scale = max(1.0, deph.max())
    for a, b, c in ((r12, r13, r23), (r13, r12, r23), (r23, r12, r13)):
        lo, hi = (b - c) ** 2, (b + c) ** 2
        if a * a < lo - 1e-12 * scale or a * a > hi + 1e-12 * scale:
            raise InvalidRatesError(
                "pure dephasing rates are not realizable by diagonal jump "
                f"operators: sqrt-rate triangle inequality violated "
                f"({a**2:.6g} not in [{lo:.6g}, {hi:.6g}])"
            )
        if min(a * a - lo, hi - a * a) < 1e-6 * scale:
            warnings.warn(
                "pure dephasing rates are near the realizability boundary",
                stacklevel=3,
            )


def _dephasing_gram(deph):
    """Gram matrix of the level coordinates realizing the dephasing rates.

    Points x_1..x_N with |x_i - x_j|^2 = 2*deph[i][j] give real diagonal
    jump operators (one per embedding coordinate) whose dissipator decays
    coherence (i, j) at exactly deph[i][j].
    """
    n = deph.shape[0]
    d2 = 2.0 * deph
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    gram = -0.5 * j @ d2 @ j
    scale = max(1.0, float(np.abs(d2).max()))
    w = np.linalg.eigvalsh(gram)
    if w.min() < -1e-10 * scale:
        raise InvalidRatesError(
            "pure dephasing rates are not jointly realizable by diagonal "
            f"jump operators (embedding defect {w.min():.3e})"
        )
    return gram


def jump_operators(spec):
    """List of (rate, operator) pairs generating the dissipator.

    Population transfer j -> i is a single off-diagonal jump per nonzero
    rate; pure dephasing is a family of real diagonal (traceless)
    operators obtained from the Euclidean embedding of the rates.
    """
    n = spec.n_levels
    ops = []
    for i in range(n):
        for j in range(n):
            if i != j and spec.gamma[i, j] > 0:
                op = np.zeros((n, n), dtype=complex)
                op[i, j] = 1.0
                ops.append((float(spec.gamma[i, j]), op))
    gram = _dephasing_gram(spec.pure_dephasing)
    w, v = np.linalg.eigh(gram)
    scale = max(1.0, float(np.abs(gram).max()))
    for k in range(n):
        if w[k] > 1e-14 * scale:
            d = np.sqrt(w[k]) * v[:, k]
            ops.append((1.0, np.diag(d).astype(complex)))
    return ops


# ----------------------------------------------------------------------
# Generalized Pauli basis
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PauliBasis:
    """Ordered orthonormal traceless Hermitian basis of su(N).

    Off-diagonal pairs come first (x then y per pair, pairs in
    lexicographic (m, n) order), then the N-1 diagonal generators, so the
    (s_o, s_d) split of a coherence vector is a contiguous partition.
    """

    n_levels: int
    elements: np.ndarray  # (N^2 - 1, N, N), complex

    @property
    def n_off(self):
        return self.n_levels * self.n_levels - self.n_levels

    @property
    def n_diag(self):
        return self.n_levels - 1

    @property
    def size(self):
        return self.n_levels * self.n_levels - 1


def build_pauli_basis(n_levels):
    """Generalized Pauli matrices in the documented order."""
    if n_levels < 2:
        raise InvalidDimensionError(f"n_levels must be >= 2, got {n_levels}")
    n = n_levels
    elems = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for m in range(n):
        for k in range(m + 1, n):
            x = np.zeros((n, n), dtype=complex)
            x[m, k] = x[k, m] = inv_sqrt2
            y = np.zeros((n, n), dtype=complex)
            y[m, k] = -1j * inv_sqrt2
            y[k, m] = 1j * inv_sqrt2
            elems.append(x)
            elems.append(y)
    for m in range(1, n):
        d = np.zeros((n, n), dtype=complex)
        norm = 1.0 / np.sqrt(m + m * m)
        for k in range(m):
            d[k, k] = norm
        d[m, m] = -m * norm
        elems.append(d)
    arr = np.array(elems)
    arr.setflags(write=False)
    return PauliBasis(n_levels=n, elements=arr)


# ----------------------------------------------------------------------
# States
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CoherenceState:
    """Coherence vector split into off-diagonal and diagonal coordinates."""

    n_levels: int
    s_o: np.ndarray
    s_d: np.ndarray

    def __post_init__(self):
        n = self.n_levels
        s_o = np.asarray(self.s_o, dtype=float)
        s_d = np.asarray(self.s_d, dtype=float)
        if s_o.shape != (n * n - n,) or s_d.shape != (n - 1,):
            raise InvalidStateError("coherence vector has wrong partition sizes")
        object.__setattr__(self, "s_o", s_o)
        object.__setattr__(self, "s_d", s_d)

    @classmethod
    def from_vector(cls, n_levels, s):
        s = np.asarray(s, dtype=float)
        n_off = n_levels * n_levels - n_levels
        return cls(n_levels, s[:n_off], s[n_off:])

    @property
    def s(self):
        return np.concatenate([self.s_o, self.s_d])

    @property
    def p_o(self):
        return float(self.s_o @ self.s_o)

    @property
    def p_d(self):
        return float(self.s_d @ self.s_d)

    @property
    def purity(self):
        return 1.0 / self.n_levels + self.p_o + self.p_d


def purity(state):
    """Tr(rho^2) = 1/N + |s|^2."""
    return state.purity


def rho_to_coherence(rho, basis):
    """Project a density matrix onto the basis: s_k = Tr(rho V_k)."""
    rho = np.asarray(rho, dtype=complex)
    n = basis.n_levels
    if rho.shape != (n, n):
        raise InvalidStateError("density matrix has wrong shape")
    if abs(np.trace(rho) - 1.0) > 1e-9:
        raise InvalidStateError(f"trace deviates from 1 by {abs(np.trace(rho)-1):.3e}")
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise InvalidStateError("density matrix is not Hermitian")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -1e-8:
        raise InvalidStateError(f"density matrix is not positive (min eig {w.min():.3e})")
    s = np.einsum("ij,kji->k", rho, basis.elements).real
    return CoherenceState.from_vector(n, s)


def coherence_to_rho(state, basis):
    """rho = I/N + sum_k s_k V_k.  Positivity is the caller's concern."""
    n = basis.n_levels
    return np.eye(n, dtype=complex) / n + np.tensordot(state.s, basis.elements, axes=1)


# ----------------------------------------------------------------------
# Lindblad model in coherence coordinates
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LindbladModel:
    """Drift (R_o, R_d, q_d) and control generators of the bilinear system."""

    spec: RelaxationSpec
    basis: PauliBasis
    R_o: np.ndarray          # (n_off, n_off), diagonal
    R_d: np.ndarray          # (n_diag, n_diag)
    q_d: np.ndarray          # (n_diag,)
    generators: np.ndarray   # (N_c, n, n) skew-symmetric

    @property
    def n_levels(self):
        return self.spec.n_levels

    @property
    def n_off(self):
        return self.basis.n_off

    @property
    def n_diag(self):
        return self.basis.n_diag

    @property
    def dim(self):
        return self.basis.size

    @property
    def n_controls(self):
        return len(self.generators)

    @property
    def R(self):
        r = np.zeros((self.dim, self.dim))
        no = self.n_off
        r[:no, :no] = self.R_o
        r[no:, no:] = self.R_d
        return r

    @property
    def q(self):
        return np.concatenate([np.zeros(self.n_off), self.q_d])

    def drift_matrix(self, u=None):
        """R + sum_k u_k A^(k)."""
        b = self.R
        if u is not None:
            b = b + np.tensordot(np.asarray(u, dtype=float), self.generators, axes=1)
        return b


def dissipator_matrix(spec):
    """Superoperator of the dissipator on row-major vec(rho)."""
    n = spec.n_levels
    ops = jump_operators(spec)
    s = np.zeros((n * n, n * n), dtype=complex)
    for col in range(n * n):
        e = np.zeros((n, n), dtype=complex)
        e[col // n, col % n] = 1.0
        acc = np.zeros((n, n), dtype=complex)
        for rate, op in ops:
            ld = op @ e @ op.conj().T
            anti = op.conj().T @ op
            acc += rate * (ld - 0.5 * (anti @ e + e @ anti))
        s[:, col] = acc.reshape(-1)
    return s


def hamiltonian_superoperator(h):
    """Superoperator of rho -> -i [H, rho] on row-major vec(rho)."""
    n = h.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def build_lindblad_model(spec, control_hamiltonians):
    """Project the dissipator and control commutators onto the basis."""
    n = spec.n_levels
    basis = build_pauli_basis(n)
    v = basis.elements
    dim = basis.size
    no = basis.n_off

    ld = dissipator_matrix(spec)
    # R_kl = Tr(V_k L_D(V_l)); q_k = Tr(V_k L_D(I/N))
    ld_on_basis = (ld @ v.reshape(dim, -1).T).T.reshape(dim, n, n)
    r_full = np.einsum("kij,lji->kl", v, ld_on_basis).real
    ld_id = (ld @ (np.eye(n) / n).reshape(-1)).reshape(n, n)
    q_full = np.einsum("kij,ji->k", v, ld_id).real

    if np.abs(r_full[:no, no:]).max() > _BLOCK_TOL or \
       np.abs(r_full[no:, :no]).max() > _BLOCK_TOL:
        raise InvalidRatesError("relaxation matrix unexpectedly couples "
                                "off-diagonal and diagonal sectors")
    if np.abs(q_full[:no]).max() > _BLOCK_TOL:
        raise InvalidRatesError("inhomogeneous term has off-diagonal components")
    r_o = r_full[:no, :no]
    off_diag_part = r_o - np.diag(np.diag(r_o))
    if np.abs(off_diag_part).max() > 1e-10:
        raise InvalidRatesError("R_o is not diagonal")

    gens = []
    for h in control_hamiltonians:
        h = np.asarray(h, dtype=complex)
        if np.abs(h - h.conj().T).max() > 1e-12:
            raise InvalidRatesError("control Hamiltonians must be Hermitian")
        comm = np.einsum("ab,mbc->mac", h, v) - np.einsum("mab,bc->mac", v, h)
        a = np.einsum("lij,mji->lm", v, -1j * comm).real
        gens.append(a)
    gens = np.array(gens) if gens else np.zeros((0, dim, dim))

    return LindbladModel(
        spec=spec,
        basis=basis,
        R_o=r_o,
        R_d=r_full[no:, no:],
        q_d=q_full[no:],
        generators=gens,
    )


def two_level_hamiltonians():
    """Control Hamiltonians reproducing the standard two-level Bloch system."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    return [0.5 * sx, 0.5 * sy]


def three_level_hamiltonians():
    """Complex couplings on the 1-2 and 2-3 transitions (four real controls)."""
    hs = []
    for (i, j) in ((0, 1), (1, 2)):
        hr = np.zeros((3, 3), dtype=complex)
        hr[i, j] = hr[j, i] = 1.0
        hi = np.zeros((3, 3), dtype=complex)
        hi[i, j] = 1j
        hi[j, i] = -1j
        hs.extend([hr, hi])
    return hs


# ----------------------------------------------------------------------
# Piecewise-constant controls and propagation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseConstantControls:
    """Control table: amplitudes[i] applies on [edges[i], edges[i+1])."""

    edges: np.ndarray       # (m + 1,)
    amplitudes: np.ndarray  # (m, N_c)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        amps = np.atleast_2d(np.asarray(self.amplitudes, dtype=float))
        if edges.ndim != 1 or len(edges) != amps.shape[0] + 1:
            raise ValueError("edges must have one more entry than amplitude rows")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def constant(cls, u, t_final):
        return cls(np.array([0.0, t_final]), np.asarray(u, dtype=float)[None, :])


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped coherence-vector samples."""

    n_levels: int
    times: np.ndarray
    states: np.ndarray  # (n_samples, N^2 - 1)

    def state_at(self, index):
        return CoherenceState.from_vector(self.n_levels, self.states[index])

    @property
    def purities(self):
        return 1.0 / self.n_levels + np.sum(self.states ** 2, axis=1)

    def to_csv(self, path):
        dim = self.states.shape[1]
        header = "t," + ",".join(f"s_{k+1}" for k in range(dim)) + ",purity"
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for t, row, p in zip(self.times, self.states, self.purities):
                cells = [f"{t:.15g}"] + [f"{x:.15g}" for x in row] + [f"{p:.15g}"]
                fh.write(",".join(cells) + "\n")


def propagate(model, initial, controls, t_final, *, rtol=1e-9, atol=1e-12,
              t_eval=None, check_positivity=True):
    """Integrate the coherence-vector dynamics with piecewise-constant controls.

    Uses an adaptive 8th-order Runge-Kutta scheme with dense output at the
    requested sample times.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if controls is None:
        nc = max(model.n_controls, 1)
        controls = PiecewiseConstantControls(
            np.array([0.0, t_final]), np.zeros((1, model.n_controls or 1)))
    if controls.edges[0] > 0 or controls.edges[-1] < t_final - 1e-12:
        raise ValueError("control table must cover [0, t_final]")
    if t_eval is None:
        t_eval = np.linspace(0.0, t_final, 101)
    t_eval = np.asarray(t_eval, dtype=float)

    r = model.R
    q = model.q
    gens = model.generators

    edges = np.clip(controls.edges, 0.0, t_final)
    seg_lo = controls.edges[:-1]
    seg_hi = controls.edges[1:]

    max_rate = max(model.spec.max_rate, 1e-12)
    first_step = 1e-4 / max_rate

    times_out = [np.array([0.0])]
    states_out = [np.asarray(initial.s, dtype=float)[None, :]]
    y = np.asarray(initial.s, dtype=float)
    for lo, hi, u in zip(seg_lo, seg_hi, controls.amplitudes):
        lo = max(lo, 0.0)
        hi = min(hi, t_final)
        if hi <= lo:
            continue
        b = r if model.n_controls == 0 else \
            r + np.tensordot(u[:model.n_controls], gens, axes=1)

        def rhs(t, s, b=b):
            return b @ s + q

        inside = t_eval[(t_eval > lo + 1e-15) & (t_eval <= hi)]
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=rtol, atol=atol,
                        t_eval=np.unique(np.append(inside, hi)),
                        first_step=min(first_step, hi - lo))
        if not sol.success:
            raise StiffnessError(
                f"integrator failed in segment [{lo}, {hi}]: {sol.message}", t=lo)
        times_out.append(sol.t)
        states_out.append(sol.y.T)
        y = sol.y[:, -1]

    times = np.concatenate(times_out)
    states = np.concatenate(states_out, axis=0)
    # keep only requested samples (plus t=0), deduplicated
    keep = np.isin(np.round(times, 12), np.round(np.append(t_eval, 0.0), 12))
    times, idx = np.unique(np.round(times[keep], 12), return_index=True)
    states = states[keep][idx]

    traj = Trajectory(n_levels=model.n_levels, times=times, states=states)
    if check_positivity:
        _warn_on_positivity(traj, model.basis)
    return traj


def _warn_on_positivity(traj, basis):
    worst = 0.0
    for row in traj.states:
        rho = coherence_to_rho(CoherenceState.from_vector(basis.n_levels, row), basis)
        worst = min(worst, float(np.linalg.eigvalsh(rho).min()))
    if worst < -1e-8:
        warnings.warn(
            f"propagated state left the positive cone (min eig {worst:.3e})",
            PositivityWarning, stacklevel=3)


def propagate_density_matrix(spec, control_hamiltonians, rho0, controls, t_final,
                             *, t_eval=None):
    """Dense-superoperator propagation of the master equation.

    Independent of the coherence-vector path: builds the N^2-dimensional
    generator per control segment and applies exact matrix exponentials.
    """
    n = spec.n_levels
    ld = dissipator_matrix(spec)
    if t_eval is None:
        t_eval = np.linspace(0.0, t_final, 101)
    t_eval = np.asarray(t_eval, dtype=float)
    if controls is None:
        controls = PiecewiseConstantControls(
            np.array([0.0, t_final]), np.zeros((1, max(len(control_hamiltonians), 1))))

    rho = np.asarray(rho0, dtype=complex).reshape(-1)
    out = np.empty((len(t_eval), n, n), dtype=complex)
    ti = 0
    t_now = 0.0
    while ti < len(t_eval) and t_eval[ti] <= 1e-15:
        out[ti] = rho.reshape(n, n)
        ti += 1
    for lo, hi, u in zip(controls.edges[:-1], controls.edges[1:],
                         controls.amplitudes):
        hi = min(hi, t_final)
        if hi <= lo:
            continue
        h = sum(uk * hk for uk, hk in zip(u, control_hamiltonians)) \
            if control_hamiltonians else np.zeros((n, n), dtype=complex)
        gen = hamiltonian_superoperator(h) + ld
        while ti < len(t_eval) and t_eval[ti] <= hi + 1e-15:
            rho_t = expm(gen * (t_eval[ti] - lo)) @ rho
            out[ti] = rho_t.reshape(n, n)
            ti += 1
        rho = expm(gen * (hi - lo)) @ rho
        t_now = hi
        if t_now >= t_final - 1e-15:
            break
    return t_eval, out
