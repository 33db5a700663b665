"""Figure rendering and plot-script emission for simulation outputs.

Figures are rendered headlessly (Agg) straight to files; alongside each
trajectory CSV the CLI also drops a small self-contained matplotlib script
so the plot can be regenerated or restyled without this package installed.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .simulation import Trajectory  # noqa: E402


def spacing_error_figure(traj: Trajectory, path, title: str = "") -> None:
    """Spacing error of every follower vs time, one line per vehicle."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for i in range(traj.n_followers):
        ax.plot(traj.times, traj.spacing_errors[:, i], lw=1.0, label=f"veh {i + 1}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("spacing error [m]")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if traj.n_followers <= 10:
        ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def velocity_figure(traj: Trajectory, path, title: str = "") -> None:
    """Velocity of the leader and every follower vs time."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    ax.plot(traj.times, traj.velocities[:, 0], "k--", lw=1.2, label="leader")
    for i in range(traj.n_followers):
        ax.plot(traj.times, traj.velocities[:, i + 1], lw=1.0, label=f"veh {i + 1}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("velocity [m/s]")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if traj.n_followers <= 10:
        ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_SCRIPT_TEMPLATE = '''#!/usr/bin/env python3
"""Regenerate the spacing-error plot from {csv_name}.

Self-contained: needs only numpy and matplotlib.  The CSV has one row per
(time, vehicle) with columns t,veh,p,v,a,u,e_spacing; vehicle 0 is the
leader and carries no spacing error.
"""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(lambda: ([], []))
with open("{csv_name}") as fh:
    for row in csv.DictReader(fh):
        veh = int(row["veh"])
        if veh == 0:
            continue
        t_list, e_list = series[veh]
        t_list.append(float(row["t"]))
        e_list.append(float(row["e_spacing"]))

fig, ax = plt.subplots(figsize=(8.0, 4.5))
for veh in sorted(series):
    t_list, e_list = series[veh]
    ax.plot(t_list, e_list, lw=1.0, label=f"veh {{veh}}")
ax.set_xlabel("t [s]")
ax.set_ylabel("spacing error [m]")
ax.grid(True, alpha=0.3)
ax.legend(fontsize=8, ncol=2)
fig.tight_layout()
fig.savefig("{png_name}", dpi=150)
print("wrote {png_name}")
'''


def emit_plot_script(csv_name: str, script_path, png_name: str = "spacing_errors.png") -> None:
    """Write a standalone script plotting e_spacing vs t from a trajectory CSV.

    ``csv_name`` is the file name the script will read, resolved relative to
    the script's own directory at run time.
    """
    with open(script_path, "w") as fh:
        fh.write(_SCRIPT_TEMPLATE.format(csv_name=csv_name, png_name=png_name))
