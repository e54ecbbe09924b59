"""Figure rendering for the CLI report path (opt-in via --plot).

Each helper takes the already-computed data and a PNG path; figures land
next to the CSV they visualize.  Data files remain the primary artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .units import KB_AU_PER_K, TIME_AU_S


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def level_diagram(states, path):
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    for s in states:
        ax.hlines(s.energy, 0.1, 0.9, lw=1.2)
        ax.annotate(f"v={s.v}", (0.92, s.energy), fontsize=7, va="center")
    ax.set_xticks([])
    ax.set_ylabel("E - asymptote (a.u.)")
    _save(fig, path)


def phase_scan(rows, path):
    e = [r[0] for r in rows]
    delta = [r[2] for r in rows]
    a_run = [r[3] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(4.2, 4.4))
    ax1.plot(e, delta, "o-", ms=3)
    ax1.set_ylabel(r"$\delta$ (rad)")
    ax2.plot(e, a_run, "o-", ms=3)
    ax2.set_ylabel(r"$-\tan\delta/k$ (a.u.)")
    ax2.set_xlabel("E (a.u.)")
    ax1.set_xscale("log")
    _save(fig, path)


def rinterp_scan(ris, avals, path):
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(ris, avals, "o-", ms=3)
    ax.set_xlabel("interpolation radius (a.u.)")
    ax.set_ylabel("scattering length (a.u.)")
    ax.axhline(0.0, color="gray", lw=0.6)
    _save(fig, path)


def wigner_scan(rows, slope, path):
    e = np.array([r[0] for r in rows])
    fc = np.abs([r[1] for r in rows])
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.loglog(e / (KB_AU_PER_K * 1e-6), fc, "o-", ms=3)
    if slope is not None:
        ax.set_title(f"low-energy log-log slope {slope:.3f}", fontsize=8)
    ax.set_xlabel(r"E ($\mu$K)")
    ax.set_ylabel(r"|FC| (hartree$^{-1/2}$)")
    _save(fig, path)


def fc_rows(table, path):
    uppers = sorted({up for _, up, _, _ in table.rows})
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    for up in uppers:
        xs, ys = [], []
        for lo, u, kind, val in table.rows:
            if u == up and lo.startswith("v"):
                xs.append(int(lo[1:]))
                ys.append(val**2)
        if xs:
            ax.semilogy(xs, np.maximum(ys, 1e-30), "o-", ms=3, label=f"upper {up}")
    ax.set_xlabel("lower vibrational index")
    ax.set_ylabel(r"FC$^2$")
    ax.legend(fontsize=7)
    _save(fig, path)


def population_traces(res, path):
    t_ns = res.times * TIME_AU_S / 1e-9
    n = len(res.labels) + 1
    fig, axes = plt.subplots(n, 1, sharex=True, figsize=(4.6, 1.6 * n))
    axes[0].plot(t_ns, res.source_squared)
    axes[0].set_ylabel(r"$|F_0|^2$", fontsize=8)
    for ax, lab in zip(axes[1:], res.labels):
        ax.plot(t_ns, res.population(lab))
        ax.set_ylabel(f"P({lab})", fontsize=8)
    axes[-1].set_xlabel("t (ns)")
    _save(fig, path)


def intensity_scan(rows, path):
    i = [r[0] for r in rows]
    p = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.loglog(i, p, "o-", ms=3)
    ax.set_xlabel(r"pump intensity (W/cm$^2$)")
    ax.set_ylabel("final population")
    _save(fig, path)


def ensemble_nodes(rows, temperature, path):
    e = np.array([r[0] for r in rows])
    p = np.array([r[2] for r in rows])
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(e / temperature, p, "o-", ms=3)
    ax.set_xlabel("E / kT")
    ax.set_ylabel("P(E)")
    _save(fig, path)
