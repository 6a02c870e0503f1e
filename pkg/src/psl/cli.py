"""Command line interface.

Every subcommand takes a JSON config (``--config``), an output
directory (``--out``) and an optional ``--seed``; ``--show-config``
prints the effective config (defaults merged with the file) and exits.
Outputs are CSV (15-significant-digit floats, LF endings) and JSON
files written into the output directory.
"""

from __future__ import annotations

import json
import os

import click
import numpy as np

from . import analytic2, bounds as bounds_mod, grape as grape_mod, magic, model
from .errors import DegenerateMagicSubspaceError, DomainError, PslError


def _load_config(path, defaults):
    cfg = dict(defaults)
    if path is not None:
        with open(path) as fh:
            cfg.update(json.load(fh))
    return cfg


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.15g" % v for v in row) + "\n")


def _write_json(path, payload):
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="JSON config file.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False),
                      default=".", help="Output directory.")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--show-config", is_flag=True,
                      help="Print the effective config and exit.")(fn)
    return fn


def _prepare(config_path, out_dir, defaults, show_config):
    cfg = _load_config(config_path, defaults)
    if show_config:
        click.echo(json.dumps(cfg, indent=2, sort_keys=True))
        raise SystemExit(0)
    os.makedirs(out_dir, exist_ok=True)
    return cfg


def _grid(cfg_grid):
    return np.linspace(cfg_grid["start"], cfg_grid["stop"],
                       int(cfg_grid["num"]))


def _three_level_example_spec(big_gamma=2.0):
    """Rates of the worked three-level system (Gamma adjustable)."""
    gamma = np.zeros((3, 3))
    gamma[0, 1] = 1.0
    gamma[0, 2] = 0.5
    gamma[1, 2] = 0.5
    return model.RelaxationSpec.uniform_dephasing(3, gamma, big_gamma)


def _spec_from_config(cfg, big_gamma=None):
    if "gamma" in cfg:
        gamma = np.array(cfg["gamma"], dtype=float)
        n = gamma.shape[0]
        if "pure_dephasing" in cfg:
            return model.RelaxationSpec(
                n, gamma, np.array(cfg["pure_dephasing"], dtype=float))
        return model.RelaxationSpec.uniform_dephasing(
            n, gamma, big_gamma if big_gamma is not None else cfg["Gamma"])
    if "gamma_plus" in cfg:
        params = analytic2.TwoLevelParams(
            cfg["gamma_plus"], cfg["gamma_minus"],
            big_gamma if big_gamma is not None else cfg["Gamma"])
        return params.to_relaxation_spec()
    return _three_level_example_spec(
        big_gamma if big_gamma is not None else cfg["Gamma"])


def _model_for(spec):
    hams = (model.two_level_hamiltonians() if spec.n_levels == 2
            else model.three_level_hamiltonians())
    return model.build_lindblad_model(spec, hams)


def _pure_state_on_Mo(lmodel, big_gamma):
    """Coherence vector of the rank-1 state whose diagonal matches M_o."""
    mo = magic.locate_Mo(lmodel, big_gamma)
    basis = model.build_pauli_basis(lmodel.spec.n_levels)
    n = lmodel.spec.n_levels
    pops = np.full(n, 1.0 / n)
    v = basis.elements[basis.n_off:]
    for k in range(basis.n_diag):
        pops = pops + mo.s_d_m[k] * np.diag(v[k]).real
    if pops.min() < 0:
        raise DomainError("magic-subspace diagonal is not a probability vector")
    psi = np.sqrt(pops)
    rho = np.outer(psi, psi).astype(complex)
    return model.rho_to_coherence(rho, basis).s


@click.group()
def main():
    """Purity speed limits for dissipative N-level systems."""


@main.command("magic-plane")
@_common_options
def magic_plane_cmd(config_path, out_dir, seed, show_config):
    """Sweep the two-level magic-plane height over the dephasing rate."""
    defaults = {
        "gamma_plus": 2.0,
        "gamma_minus": 0.8,
        "Gamma_grid": {"start": 1.0, "stop": 10.0, "num": 200},
    }
    cfg = _prepare(config_path, out_dir, defaults, show_config)
    rows = []
    for g in _grid(cfg["Gamma_grid"]):
        try:
            params = analytic2.TwoLevelParams(
                cfg["gamma_plus"], cfg["gamma_minus"], g)
            s3m, in_ball = analytic2.magic_plane(params)
            # the plane escapes the ball near Gamma = gamma_plus; mark
            # the excluded band instead of dropping rows
            if not in_ball:
                rows.append((g, float("nan"), 0.0))
            else:
                rows.append((g, s3m, 1.0))
        except (DegenerateMagicSubspaceError, DomainError):
            rows.append((g, float("nan"), 0.0))
    path = os.path.join(out_dir, "magic_plane.csv")
    _write_csv(path, ["gamma", "s3_magic", "in_ball"], rows)
    click.echo(path)


@main.command("trajectory")
@_common_options
def trajectory_cmd(config_path, out_dir, seed, show_config):
    """Time-optimal two-level path: rotation, in-plane spiral, axis drift."""
    defaults = {
        "gamma_plus": 1.0,
        "gamma_minus": 0.5,
        "Gamma": 2.0,
        "samples": 200,
        "rotation_duration": 0.0,
    }
    cfg = _prepare(config_path, out_dir, defaults, show_config)
    params = analytic2.TwoLevelParams(
        cfg["gamma_plus"], cfg["gamma_minus"], cfg["Gamma"])
    traj = analytic2.synthesize_trajectory(
        params, samples=int(cfg["samples"]),
        rotation_duration=float(cfg["rotation_duration"]))
    path = os.path.join(out_dir, "trajectory.csv")
    traj.to_csv(path)
    _write_json(os.path.join(out_dir, "trajectory_summary.json"),
                {"t_o": traj.t_o, "t_d": traj.t_d,
                 "duration": traj.t_o + traj.t_d})
    click.echo(path)


@main.command("mu")
@_common_options
def mu_cmd(config_path, out_dir, seed, show_config):
    """Multiplier flow on the diagonal subspace: p_d(mu) and mu(t)."""
    defaults = {"Gamma": 2.0, "mu_max": 1e8, "n_samples": 400}
    cfg = _prepare(config_path, out_dir, defaults, show_config)
    spec = _spec_from_config(cfg)
    big_gamma = spec.uniform_gamma()
    lmodel = _model_for(spec)
    traj = magic.integrate_mu(lmodel, big_gamma, mu_max=float(cfg["mu_max"]),
                              n_samples=int(cfg["n_samples"]))
    sd_cols = ["s_d_%d" % (k + 1) for k in range(traj.s_d.shape[1])]
    _write_csv(os.path.join(out_dir, "mu_grid.csv"),
               ["mu"] + sd_cols + ["p_d"],
               [(m, *s, p) for m, s, p in zip(traj.mu, traj.s_d, traj.p_d)])
    path = os.path.join(out_dir, "mu_time.csv")
    _write_csv(path, ["t", "mu"], list(zip(traj.times, traj.mu)))
    _write_json(os.path.join(out_dir, "mu_summary.json"),
                {"t_d": traj.t_d, "mu_initial": big_gamma})
    click.echo(path)


@main.command("tms")
@_common_options
def tms_cmd(config_path, out_dir, seed, show_config):
    """Sweep t_MS = t_o + t_d over the dephasing rate, with the
    large-Gamma asymptote ln(Gamma)/Gamma."""
    defaults = {
        "Gamma_grid": {"start": 1.3, "stop": 100.0, "num": 40, "log": True},
        "initial_purity": 1.0,
    }
    cfg = _prepare(config_path, out_dir, defaults, show_config)
    grid_cfg = cfg["Gamma_grid"]
    if grid_cfg.get("log"):
        gammas = np.geomspace(grid_cfg["start"], grid_cfg["stop"],
                              int(grid_cfg["num"]))
    else:
        gammas = _grid(grid_cfg)
    rows = []
    for g in gammas:
        spec = _spec_from_config(cfg, big_gamma=float(g))
        lmodel = _model_for(spec)
        try:
            res = magic.t_ms(lmodel, float(g), cfg["initial_purity"])
        except PslError:
            rows.append((g, *(float("nan"),) * 4))
            continue
        asym = np.log(g) / g if g > 1 else float("nan")
        rows.append((g, res.t_o, res.t_d, res.t_ms, asym))
    path = os.path.join(out_dir, "tms_sweep.csv")
    _write_csv(path, ["Gamma", "t_o", "t_d", "t_ms", "asymptote"], rows)
    click.echo(path)


@main.command("bounds")
@_common_options
def bounds_cmd(config_path, out_dir, seed, show_config):
    """Speed-limit report at one rate plus a ratio sweep over Gamma."""
    defaults = {
        "Gamma": 2.0,
        "Gamma_grid": {"start": 1.3, "stop": 20.0, "num": 30, "log": True},
        "p_initial": None,
        "p_final": None,
        "initial_purity": 1.0,
    }
    cfg = _prepare(config_path, out_dir, defaults, show_config)
    spec = _spec_from_config(cfg)
    report = bounds_mod.bound_report(spec, cfg["p_initial"], cfg["p_final"])
    payload = {
        "n_levels": spec.n_levels,
        "t_H": report.t_H,
        "t_L": report.t_L,
        "spectral_norm": report.spectral_norm,
        "log_purity_ratio": report.log_purity_ratio,
    }
    if report.t_H_diagonal_basis is not None:
        payload["t_H_diagonal_basis"] = report.t_H_diagonal_basis
    _write_json(os.path.join(out_dir, "bounds.json"), payload)

    grid_cfg = cfg["Gamma_grid"]
    if grid_cfg.get("log"):
        gammas = np.geomspace(grid_cfg["start"], grid_cfg["stop"],
                              int(grid_cfg["num"]))
    else:
        gammas = _grid(grid_cfg)
    rows = []
    for g in gammas:
        spec_g = _spec_from_config(cfg, big_gamma=float(g))
        rep = bounds_mod.bound_report(spec_g, cfg["p_initial"], cfg["p_final"])
        lmodel = _model_for(spec_g)
        try:
            t_ms_val = magic.t_ms(lmodel, float(g), cfg["initial_purity"]).t_ms
        except PslError:
            t_ms_val = float("nan")
        rows.append((g, t_ms_val, rep.t_H, rep.t_L,
                     t_ms_val / rep.t_H, t_ms_val / rep.t_L,
                     spec_g.n_levels))
    path = os.path.join(out_dir, "bounds_sweep.csv")
    _write_csv(path, ["gamma", "t_ms", "t_h", "t_l",
                      "ratio_h", "ratio_l", "n_levels"], rows)
    click.echo(path)


@main.command("grape")
@_common_options
def grape_cmd(config_path, out_dir, seed, show_config):
    """Horizon sweep of numerically optimized quenching pulses."""
    defaults = {
        "Gamma": 2.0,
        "times": {"start": 0.5, "stop": 1.3, "num": 17},
        "n_segments": 200,
        "n_restarts": 8,
        "maxiter": 400,
        "initial_state": "pure_on_Mo",  # or "equilibrium"
    }
    cfg = _prepare(config_path, out_dir, defaults, show_config)
    spec = _spec_from_config(cfg)
    lmodel = _model_for(spec)
    big_gamma = spec.uniform_gamma()
    if cfg["initial_state"] == "equilibrium":
        s0 = np.linalg.solve(lmodel.R, -lmodel.q)
    else:
        s0 = _pure_state_on_Mo(lmodel, big_gamma)
    times = _grid(cfg["times"])
    if times.size == 0:
        raise click.UsageError("empty horizon grid")
    sweep = grape_mod.minimum_time_sweep(
        lmodel, s0, times, n_segments=int(cfg["n_segments"]),
        n_restarts=int(cfg["n_restarts"]), seed=seed,
        maxiter=int(cfg["maxiter"]), keep_pulses=True)
    rows = [(r.t_final, r.cost, r.n_iterations, i)
            for i, r in enumerate(sweep.pulses)]
    _write_csv(os.path.join(out_dir, "grape_sweep.csv"),
               ["t_f", "best_cost", "iterations", "restart_index"], rows)
    best = min(sweep.pulses, key=lambda r: r.cost)
    _write_json(os.path.join(out_dir, "grape_pulse.json"), {
        "t_final": best.t_final,
        "segments": [[float(v) for v in row] for row in best.amplitudes],
    })
    path = os.path.join(out_dir, "grape_summary.json")
    _write_json(path, {
        "t_star": sweep.t_star,
        "floor": sweep.floor,
        "threshold": sweep.threshold,
        "conclusive": sweep.conclusive,
    })
    click.echo(path)


if __name__ == "__main__":
    main()
