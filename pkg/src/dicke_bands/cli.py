"""Command-line entry point.

Subcommands mirror the experiment drivers: diag, peres, npc, requant, scaling,
harmonic, all.  `--case a|b` selects the two canonical parameter sets
(omega=1, omega0=5, f=3, j=15) and (omega=omega0=1, f=5, j=15); any config-file
key can be overridden by the flag of the same name.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .config import RunConfig, build_config
from .experiments import (
    LEVELS_HEADER,
    get_bundle,
    run_harmonic,
    run_peres_experiment,
    run_requant_comparison,
    run_scaling_study,
    write_csv,
    write_manifest,
)
from .params import regime_report


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="key=value config file")
    p.add_argument("--case", choices=["a", "b"], default=None, help="canonical parameter set")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--omega0", type=float, default=None)
    p.add_argument("--coupling-ratio-f", dest="coupling_ratio_f", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--j", type=float, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None)
    p.add_argument("--maslov-index", dest="maslov_index", type=int, default=None)
    p.add_argument("--energy-ceiling-norm", dest="energy_ceiling_norm", type=float, default=None)
    p.add_argument("--window-low", dest="window_low", type=float, default=None)
    p.add_argument("--window-high", dest="window_high", type=float, default=None)
    p.add_argument("--npc-threshold", dest="npc_threshold", type=float, default=None)
    p.add_argument("--tail-tolerance", dest="tail_tolerance", type=float, default=None)
    p.add_argument("--guard-fraction", dest="guard_fraction", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--j-list", dest="j_list", type=str, default=None, help="e.g. '5 6 7 8'")
    p.add_argument("--outdir", type=str, default=None)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        k: getattr(args, k)
        for k in (
            "omega", "omega0", "coupling_ratio_f", "gamma", "j", "n_max", "maslov_index",
            "energy_ceiling_norm", "window_low", "window_high", "npc_threshold",
            "tail_tolerance", "guard_fraction", "workers", "outdir",
        )
        if getattr(args, k, None) is not None
    }
    if getattr(args, "j_list", None):
        overrides["j_list"] = tuple(float(t) for t in args.j_list.replace(",", " ").split())
    if args.case is None and args.config is None and "omega" not in overrides:
        overrides.setdefault("omega", 1.0)
    return build_config(file=args.config, case=args.case, overrides=overrides)


def _cmd_diag(cfg: RunConfig, outdir: Path) -> int:
    t0 = time.perf_counter()
    bundle = get_bundle(cfg)
    spec = bundle.spectrum
    rows = [
        (i, int(spec.parities[i]), spec.energies[i], spec.energy_norms[i],
         spec.tail_weights[i], int(spec.converged[i]))
        for i in range(spec.n_states)
    ]
    files = [str(write_csv(outdir / "spectrum.csv",
                           ["state_index", "parity", "energy", "energy_norm", "tail_weight", "converged"],
                           rows))]
    report = regime_report(bundle.params, cfg.validity_threshold)
    extra = {
        "experiment": "diag",
        "phase": report.phase,
        "validity_ratio": report.validity_ratio,
        "boa_valid": report.boa_valid,
        "n_states": spec.n_states,
        "ground_energy_norm": float(spec.energy_norms[0]),
        "residual_spot_max": spec.residual_spot_max,
    }
    write_manifest(outdir, cfg, extra, files, time.perf_counter() - t0)
    print(f"{spec.n_states} states below E/(j*omega0) = {cfg.energy_ceiling_norm}; "
          f"ground state at {spec.energy_norms[0]:.6f}; {report.phase} phase "
          f"(validity ratio {report.validity_ratio:.2f})")
    return 0


def _cmd_npc(cfg: RunConfig, outdir: Path) -> int:
    out = run_peres_experiment(cfg, outdir)
    for boundary, info in out["summary"]["npc_regular_fraction"].items():
        if info["n_states"]:
            print(f"below E/(j*omega0) = {boundary}: {info['fraction']:.1%} of "
                  f"{info['n_states']} converged states have NPC < {cfg.npc_threshold}")
    return 0


def _cmd_peres(cfg: RunConfig, outdir: Path) -> int:
    out = run_peres_experiment(cfg, outdir)
    print("wrote " + ", ".join(out["files"]))
    comm = out["summary"]["commutation_ratio"]
    print(f"commutation quality ||[H, Jz']||_F/||H||_F ~ {comm:.3e}")
    return 0


def _cmd_requant(cfg: RunConfig, outdir: Path) -> int:
    out = run_requant_comparison(cfg, outdir)
    for maslov, st in out["stats"].items():
        print(f"maslov {maslov}: {st['n_records']} paired levels, "
              f"mean dE {st['mean_delta_e']:.3e}, median {st['median_delta_e']:.3e}")
    return 0


def _cmd_scaling(cfg: RunConfig, outdir: Path) -> int:
    res = run_scaling_study(cfg, outdir)
    print(f"alpha = {res.alpha:.3f} (residual {res.fit_residual:.3f}); "
          f"harmonic alpha = {res.alpha_harmonic:.3f}")
    if res.dropped:
        print(f"dropped j values: {res.dropped}")
    return 0


def _cmd_harmonic(cfg: RunConfig, outdir: Path) -> int:
    out = run_harmonic(cfg, outdir)
    modes = out["modes"]
    print(f"normal modes: eps_minus = {modes.epsilon_minus:.6f}, "
          f"eps_plus = {modes.epsilon_plus:.6f}, e0 = {modes.e0:.6f}")
    return 0


def _cmd_all(cfg: RunConfig, outdir: Path) -> int:
    _cmd_diag(cfg, outdir)
    _cmd_peres(cfg, outdir)
    _cmd_requant(cfg, outdir)
    _cmd_harmonic(cfg, outdir)
    _cmd_scaling(cfg, outdir)
    return 0


_COMMANDS = {
    "diag": _cmd_diag,
    "peres": _cmd_peres,
    "npc": _cmd_npc,
    "requant": _cmd_requant,
    "scaling": _cmd_scaling,
    "harmonic": _cmd_harmonic,
    "all": _cmd_all,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dicke-bands", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
    args = parser.parse_args(argv)
    cfg = _config_from_args(args)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    np.set_printoptions(precision=6)
    return _COMMANDS[args.command](cfg, outdir)


if __name__ == "__main__":
    sys.exit(main())
