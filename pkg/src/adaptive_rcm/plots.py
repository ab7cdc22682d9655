"""Static convergence plots from a logged run."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .simulation import SimLog  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_log(sim_log: SimLog, out_prefix: str | Path) -> list[Path]:
    """Write force, RCM error, gamma_hat and instrument-path figures; return their paths."""
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    t = sim_log.t
    paths = []

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, np.linalg.norm(sim_log.f_rcm, axis=1), label="|f_rcm| true")
    ax.plot(t, np.linalg.norm(sim_log.f_rcm_hat, axis=1), "--", label="|f_rcm| estimated")
    ax.set(xlabel="t [s]", ylabel="force [N]", title="RCM interaction force")
    ax.legend()
    paths.append(_save(fig, prefix.with_name(prefix.name + "_force.png")))

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, sim_log.e_rcm * 1e3)
    ax.set(xlabel="t [s]", ylabel="|x_trocar - x_rcm| [mm]", title="RCM error")
    paths.append(_save(fig, prefix.with_name(prefix.name + "_ercm.png")))

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, sim_log.gamma_hat, label="gamma_hat")
    ax.plot(t, sim_log.eta, "--", label="eta")
    ax.set(xlabel="t [s]", ylabel="[-]", title="Load location criterion")
    ax.legend()
    paths.append(_save(fig, prefix.with_name(prefix.name + "_gamma.png")))

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(sim_log.x_desired[:, 0] * 1e3, sim_log.x_desired[:, 1] * 1e3, "--", label="desired")
    ax.plot(sim_log.x_ins[:, 0] * 1e3, sim_log.x_ins[:, 1] * 1e3, label="instrument")
    ax.set(xlabel="x [mm]", ylabel="y [mm]", title="Instrument path (top view)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend()
    paths.append(_save(fig, prefix.with_name(prefix.name + "_path.png")))
    return paths
