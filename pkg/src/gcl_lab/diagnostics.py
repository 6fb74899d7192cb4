"""Embedding-space diagnostics: modality-gap statistics and a 2-D PCA view.

The gap table reports, per modality, the renormalized mean embedding (the
mean direction on the sphere) and the pairwise cosines between those mean
directions — low off-diagonal cosine is the numeric signature of a modality
gap. The PCA projection gives a 2-D picture of the same geometry computed by
plain power iteration with deflation, so the whole pipeline stays exact,
deterministic, and dependency-free.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embeddings import MODALITIES, Modality, l2_normalize
from .errors import (
    BatchTooSmallError,
    DegenerateDataError,
    InvalidDimsError,
    MissingModalityError,
    NoConvergenceError,
    ShapeMismatchError,
)

_VARIANCE_FLOOR = 1e-12


def _group_samples(
    samples: Mapping[Modality, np.ndarray] | Iterable[tuple[np.ndarray, Modality]],
) -> tuple[np.ndarray, list[Modality]]:
    """Flatten either input form to (stacked rows, per-row modality tags).

    Mapping input is traversed in canonical modality order; pair-iterable
    input keeps its given order.
    """
    rows: list[np.ndarray] = []
    tags: list[Modality] = []
    if isinstance(samples, Mapping):
        for modality in MODALITIES:
            block = samples.get(modality)
            if block is None:
                continue
            block = np.asarray(block, dtype=np.float64)
            if block.ndim != 2:
                raise ShapeMismatchError(f"samples for {modality.value} must be 2-D, got ndim={block.ndim}")
            rows.extend(block)
            tags.extend([modality] * block.shape[0])
    else:
        for embedding, modality in samples:
            rows.append(np.asarray(embedding, dtype=np.float64))
            tags.append(modality)
    if rows:
        dims = {r.shape for r in rows}
        if len(dims) != 1 or rows[0].ndim != 1:
            raise ShapeMismatchError(f"sample rows must share one 1-D shape, got {sorted(dims)}")
    matrix = np.stack(rows) if rows else np.zeros((0, 0))
    return matrix, tags


@dataclass(frozen=True)
class GapReport:
    """Per-modality mean directions and their pairwise cosines.

    mean_directions holds the renormalized means (unit vectors); raw_means
    keeps the unnormalized means, whose norms measure how concentrated each
    modality is. pairwise_cosine is a 3x3 symmetric matrix in canonical
    modality order (image, text, fused) with a unit diagonal.
    """

    mean_directions: dict[Modality, np.ndarray]
    raw_means: dict[Modality, np.ndarray]
    pairwise_cosine: np.ndarray
    sample_counts: dict[Modality, int]

    def min_cross_modality_cosine(self) -> float:
        """Smallest cosine between any two distinct mean directions."""
        off = ~np.eye(3, dtype=bool)
        return float(self.pairwise_cosine[off].min())

    def to_json_dict(self) -> dict:
        return {
            "modalities": [m.value for m in MODALITIES],
            "mean_directions": {m.value: self.mean_directions[m].tolist() for m in MODALITIES},
            "raw_means": {m.value: self.raw_means[m].tolist() for m in MODALITIES},
            "raw_mean_norms": {
                m.value: float(np.linalg.norm(self.raw_means[m])) for m in MODALITIES
            },
            "pairwise_cosine": self.pairwise_cosine.tolist(),
            "sample_counts": {m.value: self.sample_counts[m] for m in MODALITIES},
            "min_cross_modality_cosine": self.min_cross_modality_cosine(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def modality_gap_table(
    samples: Mapping[Modality, np.ndarray] | Iterable[tuple[np.ndarray, Modality]],
) -> GapReport:
    """Summarize the gap between modality clusters on the unit sphere."""
    matrix, tags = _group_samples(samples)
    raw_means: dict[Modality, np.ndarray] = {}
    counts: dict[Modality, int] = {}
    for modality in MODALITIES:
        mask = np.array([t is modality for t in tags], dtype=bool)
        count = int(mask.sum())
        if count == 0:
            raise MissingModalityError(f"no samples for modality '{modality.value}'")
        raw_means[modality] = matrix[mask].mean(axis=0)
        counts[modality] = count
    directions = {m: l2_normalize(raw_means[m]) for m in MODALITIES}
    stacked = np.stack([directions[m] for m in MODALITIES])
    cosine = np.clip(stacked @ stacked.T, -1.0, 1.0)
    np.fill_diagonal(cosine, 1.0)
    cosine = (cosine + cosine.T) / 2.0
    return GapReport(
        mean_directions=directions,
        raw_means=raw_means,
        pairwise_cosine=cosine,
        sample_counts=counts,
    )


def _orthonormal_complement(v: np.ndarray) -> np.ndarray:
    """A deterministic unit vector orthogonal to v (for rank-deficient data)."""
    basis_index = int(np.argmin(np.abs(v)))
    candidate = np.zeros_like(v)
    candidate[basis_index] = 1.0
    candidate -= (candidate @ v) * v
    return candidate / np.linalg.norm(candidate)


def _power_iteration(
    cov: np.ndarray, tol: float, max_iters: int, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Dominant eigenpair of a symmetric PSD matrix by power iteration."""
    v = rng.standard_normal(cov.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(max_iters):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm < _VARIANCE_FLOOR:
            # The start vector fell in the (numerical) null space; any
            # direction has eigenvalue ~0, so the current one will do.
            return v, float(v @ cov @ v)
        w /= norm
        # PSD matrices cannot flip sign, but compare both orientations so a
        # tiny negative eigenvalue from round-off cannot stall convergence.
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            return w, float(w @ cov @ w)
        v = w
    raise NoConvergenceError(f"power iteration did not converge in {max_iters} iterations")


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Canonical orientation: the largest-magnitude coordinate is positive."""
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


@dataclass(frozen=True)
class PcaProjection:
    """Two principal directions and the projected (centered) coordinates."""

    components: np.ndarray  # (2, d), orthonormal rows
    projected: np.ndarray  # (n, 2) coordinates of the mean-centered samples
    modalities: list[Modality]
    explained_variance_ratio: np.ndarray  # (2,), non-increasing, sums to <= 1

    def to_json_dict(self) -> dict:
        return {
            "components": self.components.tolist(),
            "projected": self.projected.tolist(),
            "modalities": [m.value for m in self.modalities],
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """One row per sample: x, y, modality."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["x", "y", "modality"])
        for (x, y), modality in zip(self.projected, self.modalities):
            writer.writerow([f"{x:.12g}", f"{y:.12g}", modality.value])
        return buffer.getvalue()


def pca_2d(
    samples: Mapping[Modality, np.ndarray] | Iterable[tuple[np.ndarray, Modality]],
    tol: float = 1e-9,
    max_iters: int = 10000,
) -> PcaProjection:
    """Project samples onto their top two principal directions.

    The covariance of the mean-centered samples is decomposed by power
    iteration; the dominant direction is deflated out before the second
    iteration. Components follow the largest-coordinate-positive sign
    convention, so the output is deterministic for a given sample set.
    """
    matrix, tags = _group_samples(samples)
    n = matrix.shape[0]
    if n < 3:
        raise BatchTooSmallError(f"need at least 3 samples for a 2-D projection, got {n}")
    d = matrix.shape[1]
    if d < 2:
        raise InvalidDimsError(f"need embedding dimension >= 2, got {d}")
    centered = matrix - matrix.mean(axis=0)
    cov = (centered.T @ centered) / n
    total_variance = float(np.trace(cov))
    if total_variance < _VARIANCE_FLOOR:
        raise DegenerateDataError(f"total variance {total_variance:.3e} is numerically zero")

    rng = np.random.default_rng(0)
    first, lam1 = _power_iteration(cov, tol, max_iters, rng)
    deflated = cov - lam1 * np.outer(first, first)
    if float(np.trace(deflated)) / total_variance < 1e-10:
        # Effectively rank-1 data: finish the basis deterministically.
        second, lam2 = _orthonormal_complement(first), 0.0
    else:
        second, lam2 = _power_iteration(deflated, tol, max_iters, rng)
        # Re-orthogonalize against round-off drift from the deflation.
        second -= (second @ first) * first
        second /= np.linalg.norm(second)
        lam2 = float(second @ cov @ second)
    components = np.stack([_fix_sign(first), _fix_sign(second)])
    ratio = np.array([max(lam1, 0.0), max(lam2, 0.0)]) / total_variance
    return PcaProjection(
        components=components,
        projected=centered @ components.T,
        modalities=list(tags),
        explained_variance_ratio=ratio,
    )
