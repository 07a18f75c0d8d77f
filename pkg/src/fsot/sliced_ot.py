"""The 1D transport kernel behind every sliced optimization step.

Given m selected points projected to a line and the class target reduced to m
equal-mass bins, the squared-quantile objective has a closed-form derivative:
sort the points, match rank i to bin mean b_i, and scale by the selected
fraction of the full set. The per-bin correction factors compensate for the
varying bin lengths a non-uniform projected target induces, which otherwise
biases offsets toward dense projections and causes axis alignments.

``w2_sq_1d`` is the exact discrete 1D squared 2-Wasserstein distance and
serves as the test oracle for everything above it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySelectionError, InvalidArgumentError, InvalidProjectionError

GAMMA_MAX = 10.0
MIN_BIN_LENGTH = 1e-9


@dataclass
class SlicedStep:
    """One (class, threshold, direction) draw with its computed offsets.

    ``offsets`` and ``gammas`` are aligned with ``selected`` (original point
    indices), not with rank order.
    """

    class_index: int
    threshold: float
    theta: np.ndarray
    selected: np.ndarray
    offsets: np.ndarray
    gammas: np.ndarray
    shift: np.ndarray | None = None

    def __post_init__(self):
        if self.offsets.shape != self.selected.shape or self.gammas.shape != self.selected.shape:
            raise InvalidArgumentError("offsets and gammas must be aligned with selected indices")
        if not np.all(np.isfinite(self.offsets)):
            raise InvalidArgumentError("offsets must be finite")


def w2_sq_1d(xs, ys) -> float:
    """Exact discrete 1D squared 2-Wasserstein distance: (1/m) sum (x_(i)-y_(i))^2.

    Sorting both sides realizes the optimal monotone matching.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise InvalidArgumentError(f"size mismatch: {xs.size} vs {ys.size}")
    if xs.size == 0:
        raise InvalidArgumentError("empty inputs")
    d = np.sort(xs) - np.sort(ys)
    return float(d @ d / xs.size)


def compute_offsets(proj_points: np.ndarray, bin_means: np.ndarray, n_total: int) -> np.ndarray:
    """Scalar derivative of the mass-scaled squared transport cost per point.

    ``proj_points`` are the m projected selected points in their original
    order; rank i is matched to ``bin_means[i]``. The result is
    (2/n_total)(x_(rank) - b_rank), returned in the input order.
    """
    x = np.asarray(proj_points, dtype=np.float64).ravel()
    m = x.size
    if m == 0:
        raise EmptySelectionError("no projected points to offset")
    b = np.asarray(bin_means, dtype=np.float64).ravel()
    if b.size != m:
        raise InvalidArgumentError(f"{m} points but {b.size} bins")
    if n_total < m:
        raise InvalidArgumentError("total point count cannot be below the selected count")
    order = np.argsort(x, kind="stable")
    delta = np.empty(m)
    delta[order] = (2.0 / n_total) * (x[order] - b)
    return delta


def gamma_factors(boundaries: np.ndarray) -> np.ndarray:
    """Per-bin length correction: (average bin length) / (length of bin i).

    Degenerate bins (shorter than MIN_BIN_LENGTH) and extreme ratios are
    capped at GAMMA_MAX so a single step's displacement stays bounded. A zero
    overall range means the projection collapsed; the caller should resample
    the axis.
    """
    l = np.asarray(boundaries, dtype=np.float64).ravel()
    if l.size < 2:
        raise InvalidArgumentError("need at least two bin boundaries")
    lengths = np.diff(l)
    if np.any(lengths < 0):
        raise InvalidArgumentError("bin boundaries must be non-decreasing")
    total = l[-1] - l[0]
    if total <= 0.0:
        raise InvalidProjectionError("projected target mass collapsed to a point")
    avg = total / lengths.size
    gam = avg / np.maximum(lengths, MIN_BIN_LENGTH)
    return np.minimum(gam, GAMMA_MAX)


def offset_vectors(step: SlicedStep, eta: float, n_total: int, dim: int) -> np.ndarray:
    """Full-dimensional displacements: -eta * gamma_i * delta_i along theta.

    Unselected points get zero rows. The optimizer uses an equivalent
    scatter-accumulate internally; this materialized form is the documented
    per-step contract.
    """
    out = np.zeros((n_total, dim))
    scale = -eta * step.gammas * step.offsets
    out[step.selected] = scale[:, None] * step.theta[None, :]
    return out
