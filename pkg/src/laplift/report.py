"""Figure rendering for the run artifacts.

All figures are written as PNG files next to the delimited outputs; the Agg
backend is forced so rendering works headless, and PNG metadata is pinned so
repeated runs produce identical bytes.
"""

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt
import numpy as np

_META = {"Software": "laplift"}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)


def save_toy_figure(path, xs, tri, u_matrix, mean_values, threshold_values):
    """Lifted mass as a heatmap over (x, z) with rounding overlays."""
    zs = tri.labels[:, 0]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    ax = axes[0]
    im = ax.imshow(
        u_matrix.T,
        origin="lower",
        aspect="auto",
        extent=[xs[0], xs[-1], zs[0], zs[-1]],
        cmap="viridis",
    )
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.set_title("lifted mass")
    fig.colorbar(im, ax=ax, fraction=0.046)

    ax = axes[1]
    ax.plot(xs, mean_values[:, 0], "o-", label="mean")
    ax.plot(xs, threshold_values[:, 0], "s--", label="threshold")
    ax.set_xlabel("x")
    ax.set_ylabel("value")
    ax.set_title("roundings")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def save_registration_figure(
    path, reference, template, warped, diff_before, diff_after, deformation
):
    """Reference, template, warped template, difference images, and the
    recovered deformation as a subsampled quiver plot."""
    ref = reference.values
    panels = [
        ("reference", ref),
        ("template", template.values),
        ("warped template", warped.values),
        ("|R - T|", diff_before.values),
        ("|R - warped|", diff_after.values),
    ]
    fig, axes = plt.subplots(2, 3, figsize=(10.5, 6.5))
    for ax, (title, img) in zip(axes.ravel(), panels):
        ax.imshow(img, cmap="gray", vmin=0.0, vmax=1.0)
        ax.set_title(title)
        ax.axis("off")

    ax = axes.ravel()[-1]
    h, w = ref.shape
    step = max(1, min(h, w) // 12)
    ys, xs = np.meshgrid(np.arange(0, h, step), np.arange(0, w, step), indexing="ij")
    d = np.asarray(deformation).reshape(h, w, 2)
    ax.quiver(
        xs, ys, d[::step, ::step, 0], -d[::step, ::step, 1],
        angles="xy", scale_units="xy", scale=1.0, color="tab:red", width=0.004,
    )
    ax.set_xlim(-0.5, w - 0.5)
    ax.set_ylim(h - 0.5, -0.5)
    ax.set_aspect("equal")
    ax.set_title("deformation")
    fig.tight_layout()
    _save(fig, path)


def save_mesh_figure(path, tri):
    """The triangulated label range."""
    fig, ax = plt.subplots(figsize=(4, 4))
    if tri.dim_s == 2:
        ax.triplot(
            tri.labels[:, 0], tri.labels[:, 1], tri.simplices, color="tab:blue", lw=0.8
        )
        ax.plot(tri.labels[:, 0], tri.labels[:, 1], "k.", ms=4)
        ax.set_aspect("equal")
    else:
        zs = tri.labels[:, 0]
        ax.plot(zs, np.zeros_like(zs), "k.-", ms=6)
    ax.set_title("label range (%d labels)" % tri.num_labels)
    fig.tight_layout()
    _save(fig, path)


def save_residual_figure(path, report):
    """Primal and dual residual history on a log scale."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    if report.checked_iterations:
        ax.semilogy(report.checked_iterations, report.primal_residuals, label="primal")
        ax.semilogy(report.checked_iterations, report.dual_residuals, label="dual")
        ax.legend()
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual norm")
    fig.tight_layout()
    _save(fig, path)
