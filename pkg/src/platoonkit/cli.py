"""Command-line front end.

Subcommands:

    topo      build a named topology, print its coupling spectrum, optionally
              write the topology file and an eigenvalue CSV
    certify   evaluate the stability certificate for a (topology, gains) pair
    simulate  run the closed loop and emit trajectory/metrics CSVs, figures,
              and a standalone plot script
    sweep     scan a gain grid and emit a stability map CSV (certificate
              verdict plus numerical Hurwitz verdict per point)

Exit codes: 0 success/stable, 1 certified unstable, 2 bad input, 3 stability
theory not applicable to the topology, 4 numerical failure.  Log verbosity
comes from the PLATOONKIT_LOG environment variable (DEBUG/INFO/WARNING).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import build_closed_loop, is_hurwitz
from .config import (
    gains_from,
    metrics_options,
    parse_config,
    plant_params_from,
    sim_config_from,
    topology_from,
)
from .control import GainVector, certify_gains
from .errors import (
    ConfigError,
    PlatoonError,
    SimulationBlowUpError,
    TheoremNotApplicableError,
    TopologyError,
)
from .plotting import emit_plot_script, spacing_error_figure, velocity_figure
from .simulation import compute_metrics, metrics_csv, run, schedule_epochs, trajectory_csv
from .topology import build_named, coupling_spectrum, save_topology

EXIT_OK = 0
EXIT_UNSTABLE = 1
EXIT_BAD_INPUT = 2
EXIT_NOT_APPLICABLE = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("platoonkit")


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every output set."""

    command: str
    config_file: str
    output_dir: str
    determinism: str = (
        "outputs are seed-free and bit-reproducible for identical inputs on one platform"
    )
    version: str = __version__

    def write(self, out_dir: Path) -> None:
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2)
            fh.write("\n")


def _ensure_out(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _eig_summary(eigs: np.ndarray) -> str:
    vals = np.round(eigs.real, 9)
    uniq, counts = np.unique(vals, return_counts=True)
    if uniq.size <= 6:
        return ", ".join(
            f"{v:g} (x{c})" if c > 1 else f"{v:g}" for v, c in zip(uniq, counts)
        )
    return f"{vals.min():g} .. {vals.max():g} ({vals.size} values)"


def cmd_topo(args) -> int:
    try:
        topo = build_named(args.kind, args.n_followers, range=args.range)
        spec = coupling_spectrum(topo)
    except (TopologyError, PlatoonError) as exc:
        log.error("%s", exc)
        return EXIT_BAD_INPUT
    print(f"topology: {topo.kind_label} N={topo.n_followers} r={topo.range}")
    print(f"eigenvalues: {_eig_summary(spec.eigenvalues)}")
    print(f"min_eig: {spec.min_eig:.12g}")
    print(f"max_eig: {spec.max_eig:.12g}")
    if args.out:
        out = _ensure_out(args.out)
        save_topology(topo, out / "topology.txt")
        with open(out / "eigenvalues.csv", "w") as fh:
            fh.write("index,real,imag\n")
            for i, lam in enumerate(spec.eigenvalues, start=1):
                fh.write(f"{i},{lam.real:.17g},{lam.imag:.17g}\n")
        RunManifest("topo", "<args>", str(out)).write(out)
        print(f"wrote {out}/topology.txt and {out}/eigenvalues.csv")
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        cfg = parse_config(args.config, args.override)
        topo = topology_from(cfg)
        gains = gains_from(cfg)
        tau = plant_params_from(cfg).powertrain_tau
        spec = coupling_spectrum(topo)
    except (ConfigError, PlatoonError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_BAD_INPUT
    try:
        cert = certify_gains(gains, spec, tau)
    except TheoremNotApplicableError as exc:
        print(f"theorem not applicable: {exc}")
        return EXIT_NOT_APPLICABLE
    print(cert.report())
    return EXIT_OK if cert.holds else EXIT_UNSTABLE


def cmd_simulate(args) -> int:
    try:
        cfg = parse_config(args.config, args.override)
        sim_cfg = sim_config_from(cfg)
        settle_window, settle_band = metrics_options(cfg)
    except (ConfigError, PlatoonError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_BAD_INPUT
    out = _ensure_out(args.out)
    try:
        traj = run(sim_cfg)
    except SimulationBlowUpError as exc:
        log.error("simulation diverged: %s", exc)
        return EXIT_NUMERICAL
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_BAD_INPUT

    # slope epoch boundary = first trigger crossing of follower 1 (None if
    # the trigger is never reached within the horizon)
    trigger = sim_cfg.schedule.slope_step[1]
    crossed = np.nonzero(traj.positions[:, 1] >= trigger)[0]
    slope_onset = float(traj.times[crossed[0]]) if crossed.size else None
    epochs = schedule_epochs(sim_cfg.schedule, float(traj.times[-1]), slope_onset)
    try:
        metrics = compute_metrics(traj, settle_window, settle_band, epochs)
    except ValueError as exc:
        log.error("metrics failed: %s", exc)
        return EXIT_BAD_INPUT

    trajectory_csv(traj, out / "trajectory.csv")
    metrics_csv(metrics, out / "metrics.csv")
    spacing_error_figure(traj, out / "spacing_errors.png",
                         title=f"{sim_cfg.topology.kind_label} spacing errors")
    velocity_figure(traj, out / "velocities.png",
                    title=f"{sim_cfg.topology.kind_label} velocities")
    emit_plot_script("trajectory.csv", out / "plot_spacing_errors.py")
    RunManifest("simulate", args.config or "<defaults>", str(out)).write(out)

    worst = float(np.abs(metrics.steady_state_error[-1]).max())
    print(f"epochs: {len(metrics.epochs)}")
    print(f"final-epoch worst |steady_state_error|: {worst:.6g} m")
    print(f"min spacing error: {metrics.min_spacing_error:.6g} m")
    print(f"collision: {metrics.collision}")
    print(f"outputs in {out}")
    return EXIT_OK


def _parse_grid(spec: str):
    """'kappa_v=0.1:5:25' -> (gain name, linspace)."""
    try:
        name, rng = spec.split("=", 1)
        lo, hi, count = rng.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ConfigError(f"grid must be kappa_X=lo:hi:count, got {spec!r}") from exc
    if name not in ("kappa_s", "kappa_p", "kappa_v", "kappa_a"):
        raise ConfigError(f"unknown gain {name!r} in grid spec")
    if count < 1 or not (np.isfinite(lo) and np.isfinite(hi)):
        raise ConfigError(f"bad grid bounds in {spec!r}")
    return name, np.linspace(lo, hi, count)


def cmd_sweep(args) -> int:
    try:
        cfg = parse_config(args.config, args.override)
        topo = topology_from(cfg)
        base = gains_from(cfg)
        tau = plant_params_from(cfg).powertrain_tau
        spec = coupling_spectrum(topo)
        axes = [_parse_grid(g) for g in args.grid]
    except (ConfigError, PlatoonError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_BAD_INPUT
    if not axes:
        log.error("at least one --grid axis is required")
        return EXIT_BAD_INPUT
    if len(axes) > 2:
        log.error("at most two grid axes are supported")
        return EXIT_BAD_INPUT

    out = _ensure_out(args.out)
    names = [name for name, _ in axes]
    grids = np.meshgrid(*[vals for _, vals in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)

    rows = []
    for point in points:
        kw = dict(zip(names, point))
        try:
            gains = dataclasses.replace(base, **kw)
        except ValueError:
            rows.append((point, "invalid", "invalid"))
            continue
        try:
            cert = certify_gains(gains, spec, tau)
            verdict = "stable" if cert.holds else ("marginal" if cert.marginal else "unstable")
        except TheoremNotApplicableError as exc:
            log.error("%s", exc)
            return EXIT_NOT_APPLICABLE
        try:
            system = build_closed_loop(topo, gains, tau)
            numeric = "stable" if is_hurwitz(system, tol=1e-7) else "unstable"
        except ValueError:
            numeric = "invalid"
        rows.append((point, verdict, numeric))

    with open(out / "stability_map.csv", "w") as fh:
        fh.write(",".join(names) + ",certificate,numeric\n")
        for point, verdict, numeric in rows:
            fh.write(",".join(f"{v:.17g}" for v in point) + f",{verdict},{numeric}\n")
    RunManifest("sweep", args.config or "<defaults>", str(out)).write(out)
    n_stable = sum(1 for _, v, _ in rows if v == "stable")
    print(f"swept {len(rows)} points ({n_stable} certified stable)")
    print(f"wrote {out}/stability_map.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonkit",
        description="Platoon topology, gain certification, and closed-loop simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_topo = sub.add_parser("topo", help="build and inspect a named topology")
    p_topo.add_argument("kind")
    p_topo.add_argument("n_followers", type=int)
    p_topo.add_argument("-r", "--range", type=int, default=1)
    p_topo.add_argument("--out", default=None)
    p_topo.set_defaults(func=cmd_topo)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI config file")
    common.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE")

    p_cert = sub.add_parser("certify", parents=[common],
                            help="evaluate the stability certificate")
    p_cert.set_defaults(func=cmd_certify)

    p_sim = sub.add_parser("simulate", parents=[common], help="run the closed loop")
    p_sim.add_argument("--out", default="out")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", parents=[common], help="scan a gain grid")
    p_sweep.add_argument("--grid", action="append", default=[],
                         metavar="KAPPA_X=LO:HI:COUNT")
    p_sweep.add_argument("--out", default="out")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PLATOONKIT_LOG", "INFO").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, matching the bad-input contract
        return int(exc.code) if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
