"""Experiment executors: artifact layout, sweeps, and oracle fixtures.

Each run archives its resolved config, stamps every artifact with the
config hash, and confines timestamps and wall time to metadata.json so
that re-running an archived config reproduces all payload files
byte-for-byte. Sweep points execute independently (optionally in a
process pool); a manifest records per-point status so partial sweeps
keep their completed points.
"""
from __future__ import annotations

import dataclasses
import json
import pathlib
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np
from scipy.linalg import expm

from . import __version__
from .config import (
    ExperimentConfig,
    WignerSpec,
    canonical_dict,
    config_from_dict,
    config_hash,
    write_config_yaml,
)
from .errors import ConfigError, GkpFloquetError
from .floquet import (
    PERIOD,
    floquet_states,
    harmonic_propagator,
    kicked_propagator,
    select_gkp_states,
)
from .fock import FockSpace, rotation
from .hamiltonians import gkp_hamiltonian, truncated_gkp_hamiltonian
from .metrics import marginals, wigner, write_marginals_csv, write_wigner_csv
from .noise import write_trajectory_csv
from .prep import prepare, write_timeline_csv

__all__ = ["DEFAULT_SWEEPS", "execute", "run_oracle"]

# default axis and grid per sweep kind; a config's sweep section overrides
DEFAULT_SWEEPS = {
    "n-sweep": ("model.n_harmonics", (1, 2, 3, 4, 5, 6)),
    "prep-sweep": ("ramp.t_f", (1000.0, 1500.0, 2000.0, 3000.0)),
    "robustness-sweep": ("model.impedance_ratio", (0.95, 1.0, 1.05)),
}

_PAIR_COLUMNS = (
    "axis_value",
    "squeezing_db_x_plus", "squeezing_db_p_plus",
    "logical_fidelity_plus", "logical_infidelity_plus",
    "mean_photon_plus", "quasienergy_plus",
    "squeezing_db_x_minus", "squeezing_db_p_minus",
    "logical_fidelity_minus", "logical_infidelity_minus",
    "mean_photon_minus", "quasienergy_minus",
)

_PREP_COLUMNS = (
    "axis_value",
    "squeezing_db_x", "squeezing_db_p",
    "logical_fidelity", "logical_infidelity",
    "mean_photon_number",
    "squeezing_db_x_se", "squeezing_db_p_se", "logical_fidelity_se",
    "mean_jumps_per_trajectory",
)


def _write_rows(path, chash: str, columns, rows) -> None:
    """Hash-stamped CSV: '# config: <hash>' line, header, %.12g rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config: {chash}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{row[c]:.12g}" for c in columns) + "\n")


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=float)
        fh.write("\n")


def _mean_photon_columns(states: np.ndarray) -> np.ndarray:
    n = np.arange(states.shape[0])
    return np.einsum("nk,n->k", np.abs(states) ** 2, n).real


def _pair_metrics(config: ExperimentConfig) -> dict:
    """Floquet GKP pair figures of merit for one model configuration."""
    space = FockSpace(config.space_dim)
    u = harmonic_propagator(space, config.model, config.integrator)
    sol = floquet_states(u)
    pair = select_gkp_states(sol)
    nbar = _mean_photon_columns(sol.states)
    return {
        "squeezing_db_x_plus": pair.squeezing_plus.db_x,
        "squeezing_db_p_plus": pair.squeezing_plus.db_p,
        "logical_fidelity_plus": pair.fidelity_plus,
        "logical_infidelity_plus": 1.0 - pair.fidelity_plus,
        "mean_photon_plus": float(nbar[pair.index_plus]),
        "quasienergy_plus": float(sol.quasienergies[pair.index_plus]),
        "squeezing_db_x_minus": pair.squeezing_minus.db_x,
        "squeezing_db_p_minus": pair.squeezing_minus.db_p,
        "logical_fidelity_minus": pair.fidelity_minus,
        "logical_infidelity_minus": 1.0 - pair.fidelity_minus,
        "mean_photon_minus": float(nbar[pair.index_minus]),
        "quasienergy_minus": float(sol.quasienergies[pair.index_minus]),
        "_solution": (sol, pair),
    }


def _prep_metrics(config: ExperimentConfig, point_dir: pathlib.Path | None) -> dict:
    """One preparation run; writes timeline (and trajectory) files."""
    space = FockSpace(config.space_dim)
    noise = config.noise if (config.noise and config.noise.active) else None
    if noise is not None:
        # the experiment's master_seed governs the ensemble
        noise = dataclasses.replace(noise, master_seed=config.master_seed)
    run = prepare(space.basis_state(0), config.ramp, config.model,
                  cfg=config.integrator, noise=noise)
    rec = run.timeline[-1]
    diag = run.diagnostics or {}
    row = {
        "squeezing_db_x": rec.db_x,
        "squeezing_db_p": rec.db_p,
        "logical_fidelity": rec.logical_fidelity,
        "logical_infidelity": 1.0 - rec.logical_fidelity,
        "mean_photon_number": rec.mean_photon_number,
        "squeezing_db_x_se": diag.get("squeezing_db_x_se", 0.0),
        "squeezing_db_p_se": diag.get("squeezing_db_p_se", 0.0),
        "logical_fidelity_se": diag.get("logical_fidelity_se", 0.0),
        "mean_jumps_per_trajectory": float(np.mean(diag["jump_counts"]))
        if "jump_counts" in diag else 0.0,
    }
    if point_dir is not None:
        chash = config_hash(config)
        write_timeline_csv(point_dir / "timeline.csv", run,
                           preamble=f"# config: {chash}")
        if "jump_counts" in diag:
            write_trajectory_csv(point_dir / "trajectories.csv", run,
                                 preamble=f"# config: {chash}")
    return row


def _set_path(raw: dict, axis: str, value) -> None:
    node = raw
    parts = axis.split(".")
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"sweep axis {axis!r}: {p} is not a section")
        node = nxt
    node[parts[-1]] = value


def _point_config(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    raw = canonical_dict(config)
    raw["sweep"] = None
    _set_path(raw, axis, value)
    return config_from_dict(raw, source=f"{axis}={value}")


def _sweep_point(args):
    """Worker entry: run one sweep point and return its combined-CSV row."""
    raw, kind, value, point_dir = args
    config = config_from_dict(raw)
    point_dir = pathlib.Path(point_dir)
    if kind == "prep-sweep":
        row = _prep_metrics(config, point_dir)
    else:
        row = {k: v for k, v in _pair_metrics(config).items() if k != "_solution"}
    row["axis_value"] = float(value)
    return row


def _run_sweep(config: ExperimentConfig, out: pathlib.Path, workers: int) -> int:
    kind = config.experiment
    if config.sweep is not None:
        axis, values = config.sweep.axis, config.sweep.values
    elif kind in DEFAULT_SWEEPS:
        axis, values = DEFAULT_SWEEPS[kind]
    else:
        raise ConfigError(f"{kind} requires a sweep section (axis and values)")
    chash = config_hash(config)
    columns = _PREP_COLUMNS if kind == "prep-sweep" else _PAIR_COLUMNS

    # resolve every point configuration up front: bad axes or values are
    # config errors and abort before any numerics run
    points = []
    for k, value in enumerate(values):
        pc = _point_config(config, axis, value)
        pdir = out / f"point_{k:03d}"
        pdir.mkdir(parents=True, exist_ok=True)
        write_config_yaml(pdir / "config.yaml", pc)
        points.append((canonical_dict(pc), kind, value, str(pdir)))

    results: dict[int, dict] = {}
    errors: dict[int, str] = {}
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {k: pool.submit(_sweep_point, p) for k, p in enumerate(points)}
            for k, fut in futures.items():
                try:
                    results[k] = fut.result()
                except GkpFloquetError as exc:
                    errors[k] = f"{type(exc).__name__}: {exc}"
    else:
        for k, p in enumerate(points):
            try:
                results[k] = _sweep_point(p)
            except GkpFloquetError as exc:
                errors[k] = f"{type(exc).__name__}: {exc}"

    rows = [results[k] for k in sorted(results)]
    _write_rows(out / f"{kind.replace('-', '_')}.csv", chash, columns, rows)
    manifest = {
        "config": chash,
        "experiment": kind,
        "axis": axis,
        "values": [float(v) for v in values],
        "points": [
            {
                "index": k,
                "value": float(v),
                "dir": f"point_{k:03d}",
                "status": "failed" if k in errors else "complete",
                "error": errors.get(k),
            }
            for k, (_, _, v, _) in enumerate(points)
        ],
        "n_failed": len(errors),
    }
    _write_json(out / "manifest.json", manifest)

    lines = [f"{kind} over {axis}: {len(results)}/{len(values)} points complete"]
    for k in sorted(results):
        row = results[k]
        key = "squeezing_db_x" if kind == "prep-sweep" else "squeezing_db_x_plus"
        fid = "logical_fidelity" if kind == "prep-sweep" else "logical_fidelity_plus"
        lines.append(f"  {axis} = {values[k]:g}: {row[key]:.2f} dB, "
                     f"fidelity {row[fid]:.4f}")
    for k in sorted(errors):
        lines.append(f"  {axis} = {values[k]:g}: FAILED ({errors[k]})")
    _write_summary(out, config, lines)
    return 4 if errors else 0


def _run_floquet_scan(config: ExperimentConfig, out: pathlib.Path) -> int:
    chash = config_hash(config)
    metrics = _pair_metrics(config)
    sol, pair = metrics.pop("_solution")
    nbar = _mean_photon_columns(sol.states)
    _write_rows(
        out / "quasienergies.csv", chash,
        ("state_index", "quasienergy_over_omega0", "mean_photon_number"),
        [
            {"state_index": k, "quasienergy_over_omega0": float(sol.quasienergies[k]),
             "mean_photon_number": float(nbar[k])}
            for k in range(sol.dim)
        ],
    )
    branch_columns = ("state_index", "quasienergy_over_omega0",
                      "squeezing_db_x", "squeezing_db_p",
                      "logical_fidelity", "logical_infidelity",
                      "mean_photon_number")
    rows = []
    for branch, idx in (("plus", pair.index_plus), ("minus", pair.index_minus)):
        rows.append({
            "state_index": idx,
            "quasienergy_over_omega0": metrics[f"quasienergy_{branch}"],
            "squeezing_db_x": metrics[f"squeezing_db_x_{branch}"],
            "squeezing_db_p": metrics[f"squeezing_db_p_{branch}"],
            "logical_fidelity": metrics[f"logical_fidelity_{branch}"],
            "logical_infidelity": metrics[f"logical_infidelity_{branch}"],
            "mean_photon_number": metrics[f"mean_photon_{branch}"],
        })
    _write_rows(out / "floquet_pair.csv", chash, branch_columns, rows)
    _write_json(out / "results.json", {"config": chash, "pair": metrics})
    _write_summary(out, config, [
        f"GKP Floquet pair at J/omega_0 = {config.model.j_over_omega0:g}, "
        f"N = {config.model.n_harmonics}, D = {config.space_dim}",
        f"  psi_plus:  {metrics['squeezing_db_x_plus']:.2f} dB, "
        f"fidelity {metrics['logical_fidelity_plus']:.4f}",
        f"  psi_minus: {metrics['squeezing_db_x_minus']:.2f} dB, "
        f"fidelity {metrics['logical_fidelity_minus']:.4f}",
    ])
    return 0


def _run_wigner_dump(config: ExperimentConfig, out: pathlib.Path) -> int:
    chash = config_hash(config)
    spec = config.wigner or WignerSpec()
    metrics = _pair_metrics(config)
    sol, pair = metrics.pop("_solution")
    idx = pair.index_plus if spec.state == "psi_plus" else pair.index_minus
    state = sol.state(idx)
    grid = np.linspace(-spec.half_extent, spec.half_extent, spec.n_points)
    w = wigner(state, grid, grid)
    px, pp = marginals(state, grid, grid)
    preamble = f"# config: {chash}"
    write_wigner_csv(out / "wigner.csv", grid, grid, w, preamble=preamble)
    write_marginals_csv(out / "marginals.csv", grid, px, grid, pp,
                        preamble=preamble)
    _write_json(out / "results.json", {
        "config": chash,
        "state": spec.state,
        "squeezing_db_x": metrics[f"squeezing_db_x_{spec.state.removeprefix('psi_')}"],
        "grid": {"half_extent": spec.half_extent, "n_points": spec.n_points},
    })
    _write_summary(out, config, [
        f"Wigner grid for {spec.state}: {spec.n_points} x {spec.n_points} points, "
        f"|x|, |p| <= {spec.half_extent:g}",
    ])
    return 0


def _write_summary(out: pathlib.Path, config: ExperimentConfig, lines) -> None:
    with open(out / "summary.txt", "w", encoding="utf-8") as fh:
        fh.write(f"experiment: {config.experiment}\n")
        fh.write(f"config:     {config_hash(config)}\n")
        for line in lines:
            fh.write(line + "\n")


def _write_metadata(out: pathlib.Path, config: ExperimentConfig, workers: int,
                    wall_time: float) -> None:
    _write_json(out / "metadata.json", {
        "config": config_hash(config),
        "experiment": config.experiment,
        "master_seed": config.master_seed,
        "code_version": __version__,
        "workers": workers,
        "wall_time_s": wall_time,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "physical_units": config.physical_units,
    })


def execute(config: ExperimentConfig, out_dir=None, workers: int = 1,
            force_sweep: bool = False) -> int:
    """Run one experiment; returns 0 (complete) or 4 (partial sweep).

    ``force_sweep`` drives any sweepable experiment through the generic
    sweep executor using the config's sweep section, which lets the
    scalar kinds (floquet-scan) be swept over arbitrary numeric axes.
    """
    if force_sweep and config.experiment == "wigner-dump":
        raise ConfigError("wigner-dump does not support sweeping")
    out = pathlib.Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_config_yaml(out / "config.yaml", config)
    start = time.perf_counter()
    if config.experiment == "floquet-scan" and not force_sweep:
        status = _run_floquet_scan(config, out)
    elif config.experiment == "wigner-dump":
        status = _run_wigner_dump(config, out)
    else:
        status = _run_sweep(config, out, workers)
    _write_metadata(out, config, workers, time.perf_counter() - start)
    return status


def run_oracle(config: ExperimentConfig, out_dir=None) -> int:
    """Recompute the brute-force reference quantities and record them.

    The outputs (kicked-map identity residual, Fourier-symmetry
    commutator norms, Floquet-pair figures of merit, Fock mod-4 residues
    of psi_plus) are the independently derived fixtures the test suite
    pins its tolerances against.
    """
    out = pathlib.Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_config_yaml(out / "config.yaml", config)
    start = time.perf_counter()
    chash = config_hash(config)
    space = FockSpace(config.space_dim)
    half = config.space_dim // 2

    u_kick = kicked_propagator(space, config.model)
    u_exact = expm(-1j * PERIOD * gkp_hamiltonian(space, config.model))
    kicked_delta = float(np.linalg.norm((u_kick - u_exact)[:half, :half], 2))

    r90 = rotation(space, np.pi / 2.0)
    commutators = {}
    for n in range(1, 7):
        h = truncated_gkp_hamiltonian(
            space, dataclasses.replace(config.model, n_harmonics=n))
        commutators[str(n)] = float(np.linalg.norm(h @ r90 - r90 @ h, 2))

    metrics = _pair_metrics(config)
    sol, pair = metrics.pop("_solution")
    psi = np.abs(sol.states[:, pair.index_plus]) ** 2
    mod4 = {f"residue_{r}": float(psi[r::4].sum()) for r in range(4)}

    _write_json(out / "oracles.json", {
        "config": chash,
        "values": {
            "kicked_identity_delta": kicked_delta,
            "fourier_commutator_norms": commutators,
            "floquet_pair": {k: v for k, v in metrics.items()},
            "psi_plus_mod4": mod4,
        },
    })
    _write_summary(out, config, [
        f"kicked-map identity residual: {kicked_delta:.3e}",
        f"max Fourier commutator norm (N = 1..6): {max(commutators.values()):.3e}",
        f"psi_plus: {metrics['squeezing_db_x_plus']:.2f} dB, "
        f"infidelity {metrics['logical_infidelity_plus']:.2e}",
    ])
    _write_metadata(out, config, 1, time.perf_counter() - start)
    return 0
