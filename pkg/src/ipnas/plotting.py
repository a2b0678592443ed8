"""Figure rendering for the report paths (search history, PCA views).

Figures are written straight to files with the Agg backend, so the CLI
works on headless machines.  Each function takes already-computed rows and
never touches the search itself.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_fitness_history(history, path):
    """Global best and best-of-generation fitness against the generation axis."""
    generations = [snap.generation for snap in history]
    gbest = [snap.gbest_fitness for snap in history]
    best_of_gen = [float(np.max(snap.fitnesses)) for snap in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(generations, best_of_gen, "o-", color="tab:blue", label="best of generation")
    ax.plot(generations, gbest, "s-", color="tab:red", label="global best")
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pca_trajectory(pc1, pc2, fitness, is_gbest, path):
    """All projected points colored by fitness; the global-best path in red."""
    pc1, pc2 = np.asarray(pc1), np.asarray(pc2)
    fitness, is_gbest = np.asarray(fitness), np.asarray(is_gbest, dtype=bool)
    fig, ax = plt.subplots(figsize=(6, 5))
    others = ~is_gbest
    scatter = ax.scatter(
        pc1[others], pc2[others], c=fitness[others], cmap="viridis", s=18, alpha=0.8
    )
    fig.colorbar(scatter, ax=ax, label="fitness")
    if is_gbest.any():
        ax.plot(pc1[is_gbest], pc2[is_gbest], "r.-", lw=1.5, ms=9, label="global best")
        ax.legend(loc="best")
    ax.set_xlabel("pc1")
    ax.set_ylabel("pc2")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pca_surface(pc1, pc2, fitness, path):
    """Triangulated fitness surface over the first two components."""
    pc1, pc2, fitness = np.asarray(pc1), np.asarray(pc2), np.asarray(fitness)
    fig = plt.figure(figsize=(6, 5))
    ax = fig.add_subplot(projection="3d")
    try:
        ax.plot_trisurf(pc1, pc2, fitness, cmap="viridis", linewidth=0.1)
    except (RuntimeError, ValueError):
        # Triangulation needs non-collinear points; fall back to a scatter.
        ax.scatter(pc1, pc2, fitness, c=fitness, cmap="viridis")
    ax.set_xlabel("pc1")
    ax.set_ylabel("pc2")
    ax.set_zlabel("fitness")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
