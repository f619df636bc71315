"""PNG figures for CLI outputs (opt-in, headless backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_branch(rows: Sequence[Mapping], path: Path) -> Path:
    """lambda(s) and mu(s) from branch CSV rows."""
    s = [r["s"] for r in rows]
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
    a.plot(s, [r["lambda"] for r in rows], "o-", ms=3)
    a.set_xlabel("s")
    a.set_ylabel("lambda (m/s)")
    b.plot(s, [r["mu"] for r in rows], "o-", ms=3)
    b.set_xlabel("s")
    b.set_ylabel("mu")
    return _save(fig, path)


def plot_profiles(profiles: Mapping[str, Sequence[Mapping]], path: Path, title: str = "") -> Path:
    """Surface profiles eta(x), one curve per named row list."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for name, rows in profiles.items():
        ax.plot([r["x"] for r in rows], [r["eta"] for r in rows], label=name)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("eta (m)")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_residuals(reports: Sequence[Mapping], path: Path) -> Path:
    """Verification residuals along a branch on a log scale."""
    s = [r["s"] for r in reports]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for key in ("bernoulli", "boundary_top", "boundary_bottom", "cauchy_riemann", "laplacian_residual"):
        ax.semilogy(s, [max(r[key], 1e-18) for r in reports], "o-", ms=3, label=key)
    ax.set_xlabel("s")
    ax.set_ylabel("max residual")
    ax.legend(fontsize=8)
    return _save(fig, path)
