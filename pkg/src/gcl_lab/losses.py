"""Contrastive losses over image/text/fused embedding triplets.

Implements the standard two-direction contrastive loss, its generalized form
with fused-modality query/candidate pairs, ablation subsets of the pair set,
and an intra-modality separation baseline. Every loss returns its value, the
per-pair breakdown, and analytic gradients with respect to all three
embedding matrices (the fused matrix is treated as an independent input; the
trainer composes the fusion Jacobian separately).

Two denominator conventions are supported:

- ``algorithm_masked`` (default): for query modality ``a``, each term's
  denominator is its own numerator plus every off-diagonal entry of the three
  similarity blocks (a,i), (a,t), (a,it). All diagonal entries are positives
  of some anchor and are masked out; the negative pool is shared across rows.
- ``equation_literal``: the denominator is the unmasked row sum over all
  modalities and all candidates, exactly as a textbook softmax would read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from .embeddings import MODALITIES, EmbeddingMatrix, Modality, modality_from_code
from .errors import (
    BatchTooSmallError,
    ConfigError,
    EmptyPairSetError,
    InvalidTemperatureError,
    ShapeMismatchError,
)

Pair = tuple[Modality, Modality]

_I, _T, _IT = Modality.IMAGE, Modality.TEXT, Modality.FUSED

# Canonical order: cross-modal directions first, then fused-candidate, then
# fused-query. Subsets keep this order for stable per_term keys.
FULL_PAIR_SET: tuple[Pair, ...] = (
    (_I, _T),
    (_T, _I),
    (_I, _IT),
    (_T, _IT),
    (_IT, _I),
    (_IT, _T),
)

CL_PAIR_SET: tuple[Pair, ...] = ((_I, _T), (_T, _I))

# Pairs removed by each named ablation.
ABLATION_DROPS: dict[str, tuple[Pair, ...]] = {
    "cross_modal": ((_I, _T), (_T, _I)),
    "it_candidate": ((_I, _IT), (_T, _IT)),
    "it_query": ((_IT, _I), (_IT, _T)),
}


def pair_name(pair: Pair) -> str:
    """Readable pair key, e.g. (Image, Fused) -> 'i2it'."""
    return f"{pair[0].code}2{pair[1].code}"


def parse_pair(name: str) -> Pair:
    """Inverse of pair_name; raises ConfigError on malformed names."""
    parts = name.split("2")
    if len(parts) != 2:
        raise ConfigError(f"pair name must look like 'i2t', got {name!r}")
    try:
        pair = (modality_from_code(parts[0]), modality_from_code(parts[1]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if pair not in FULL_PAIR_SET:
        raise ConfigError(f"pair {name!r} is not one of the six query/candidate pairs")
    return pair


class DenominatorMode(Enum):
    ALGORITHM_MASKED = "algorithm_masked"
    EQUATION_LITERAL = "equation_literal"


@dataclass(frozen=True)
class LossConfig:
    """Temperature, pair set, denominator convention, and normalization.

    normalization defaults to |pair_set| * N, resolved per batch; pass an
    explicit positive value to override.
    """

    tau: float = 0.07
    pair_set: tuple[Pair, ...] = FULL_PAIR_SET
    denominator_mode: DenominatorMode = DenominatorMode.ALGORITHM_MASKED
    normalization: float | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise InvalidTemperatureError(f"tau must be > 0, got {self.tau}")
        pairs = tuple(self.pair_set)
        if not pairs:
            raise EmptyPairSetError("pair_set must contain at least one pair")
        for p in pairs:
            if p not in FULL_PAIR_SET:
                raise ConfigError(f"invalid pair {p}; must be one of the six query/candidate pairs")
        if len(set(pairs)) != len(pairs):
            raise ConfigError(f"duplicate pairs in pair_set: {[pair_name(p) for p in pairs]}")
        # keep canonical order regardless of how the caller listed them
        ordered = tuple(p for p in FULL_PAIR_SET if p in set(pairs))
        object.__setattr__(self, "pair_set", ordered)
        if self.normalization is not None and self.normalization <= 0:
            raise ConfigError(f"normalization must be > 0, got {self.normalization}")

    def resolve_normalization(self, n: int) -> float:
        return float(self.normalization) if self.normalization is not None else float(len(self.pair_set) * n)


@dataclass(frozen=True)
class TripletBatch:
    """Matched image/text/fused embedding matrices; row j of each matrix
    comes from the same underlying pair j."""

    images: EmbeddingMatrix
    texts: EmbeddingMatrix
    fused: EmbeddingMatrix

    def __post_init__(self):
        shapes = {m.rows.shape for m in (self.images, self.texts, self.fused)}
        if len(shapes) != 1:
            raise ShapeMismatchError(f"triplet matrices must share N and d, got {sorted(shapes)}")
        tags = (self.images.modality, self.texts.modality, self.fused.modality)
        if tags != (Modality.IMAGE, Modality.TEXT, Modality.FUSED):
            raise ShapeMismatchError(f"triplet modality tags must be (image, text, fused), got {tags}")

    @classmethod
    def from_rows(
        cls,
        images: np.ndarray,
        texts: np.ndarray,
        fused: np.ndarray,
        validate_norms: bool = True,
    ) -> "TripletBatch":
        batch = cls(
            EmbeddingMatrix(images, Modality.IMAGE),
            EmbeddingMatrix(texts, Modality.TEXT),
            EmbeddingMatrix(fused, Modality.FUSED),
        )
        if validate_norms:
            for mat in (batch.images, batch.texts, batch.fused):
                norms = np.linalg.norm(mat.rows, axis=1)
                if np.max(np.abs(norms - 1.0)) > 1e-6:
                    bad = int(np.argmax(np.abs(norms - 1.0)))
                    raise ShapeMismatchError(
                        f"{mat.modality.value} row {bad} has norm {norms[bad]:.8f}, expected unit rows"
                    )
        return batch

    @property
    def n(self) -> int:
        return self.images.n

    @property
    def dim(self) -> int:
        return self.images.dim


@dataclass(frozen=True)
class LossGrads:
    """Analytic partials of the loss with respect to the three matrices."""

    images: np.ndarray
    texts: np.ndarray
    fused: np.ndarray

    def by_modality(self, modality: Modality) -> np.ndarray:
        return {Modality.IMAGE: self.images, Modality.TEXT: self.texts, Modality.FUSED: self.fused}[modality]


@dataclass(frozen=True)
class LossOutput:
    """Loss value, per-pair breakdown, and gradients.

    per_term entries are each pair's summed loss divided by N (not by the
    full normalization) so terms stay comparable across ablations; value
    applies the configured normalization. grad_tau is the partial with
    respect to the temperature, for optional learnable-tau training.
    """

    value: float
    per_term: dict[str, float]
    grads: LossGrads
    grad_tau: float = 0.0


def _logsumexp(x: np.ndarray) -> float:
    """Stable log-sum-exp of a flat array; -inf for empty input."""
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    return m + math.log(float(np.sum(np.exp(x - m))))


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    m = np.max(x, axis=1, keepdims=True)
    return (m + np.log(np.sum(np.exp(x - m), axis=1, keepdims=True)))[:, 0]


def _offdiag_mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def _assemble_embedding_grads(
    grid_grads: dict[tuple[Modality, Modality], np.ndarray],
    rows: dict[Modality, np.ndarray],
    tau: float,
    scale: float,
) -> tuple[LossGrads, float]:
    """Chain-rule from per-block logit gradients to embedding gradients.

    Each block holds s_am = E_a @ E_m.T / tau, so dL/dE_a gets G @ E_m / tau
    and dL/dE_m gets G.T @ E_a / tau (both accumulate when a == m). Also
    returns dL/dtau = -sum(G * S)/tau, using S recomputed from the rows.
    """
    n, d = next(iter(rows.values())).shape
    grads = {m: np.zeros((n, d)) for m in MODALITIES}
    grad_tau = 0.0
    for (a, m), g in grid_grads.items():
        grads[a] += g @ rows[m] / tau
        grads[m] += g.T @ rows[a] / tau
        s_block = rows[a] @ rows[m].T / tau
        grad_tau += float(np.sum(g * s_block))
    grad_tau = -grad_tau / tau
    return (
        LossGrads(
            images=grads[Modality.IMAGE] * scale,
            texts=grads[Modality.TEXT] * scale,
            fused=grads[Modality.FUSED] * scale,
        ),
        grad_tau * scale,
    )


def gcl_loss(batch: TripletBatch, cfg: LossConfig | None = None) -> LossOutput:
    """Generalized contrastive loss over the configured query/candidate pairs.

    For each pair (a, b) and anchor j, the positive logit is
    dot(e_a^j, e_b^j)/tau. Under algorithm_masked the denominator adds the
    shared off-diagonal negative pool of blocks (a, i), (a, t), (a, it);
    under equation_literal it is the full unmasked row sum over the three
    blocks. Gradients are returned for all three matrices, with zeros for a
    modality no retained pair touches.
    """
    cfg = cfg if cfg is not None else LossConfig()
    n = batch.n
    rows = {
        Modality.IMAGE: batch.images.rows,
        Modality.TEXT: batch.texts.rows,
        Modality.FUSED: batch.fused.rows,
    }
    tau = cfg.tau
    query_mods = tuple(m for m in MODALITIES if any(a is m for a, _ in cfg.pair_set))
    blocks = {(a, m): rows[a] @ rows[m].T / tau for a in query_mods for m in MODALITIES}

    grid_grads = {key: np.zeros((n, n)) for key in blocks}
    per_term: dict[str, float] = {}
    total = 0.0

    if cfg.denominator_mode is DenominatorMode.ALGORITHM_MASKED:
        offdiag = _offdiag_mask(n)
        # log of the shared negative pool per query modality (-inf when N=1)
        neg_log = {
            a: _logsumexp(np.concatenate([blocks[(a, m)][offdiag] for m in MODALITIES]))
            for a in query_mods
        }
        # accumulated inverse denominators per query modality, in log space
        neg_inv_z: dict[Modality, list[np.ndarray]] = {a: [] for a in query_mods}
        for a, b in cfg.pair_set:
            diag = np.diagonal(blocks[(a, b)])
            log_z = np.logaddexp(diag, neg_log[a])
            term_losses = log_z - diag
            term_sum = float(np.sum(term_losses))
            per_term[pair_name((a, b))] = term_sum / n
            total += term_sum
            q = np.exp(diag - log_z)
            grid_grads[(a, b)][np.arange(n), np.arange(n)] += q - 1.0
            neg_inv_z[a].append(-log_z)
        for a in query_mods:
            log_w = _logsumexp(np.concatenate(neg_inv_z[a]))
            for m in MODALITIES:
                # off-diagonal entry (r,k) appears in every denominator of
                # query modality a, weighted by exp(s)/Z summed over terms
                contrib = np.exp(blocks[(a, m)] + log_w)
                np.fill_diagonal(contrib, 0.0)
                grid_grads[(a, m)] += contrib
    else:
        row_log_z = {
            a: _logsumexp_rows(np.concatenate([blocks[(a, m)] for m in MODALITIES], axis=1))
            for a in query_mods
        }
        pairs_per_query = {a: sum(1 for q, _ in cfg.pair_set if q is a) for a in query_mods}
        for a in query_mods:
            softmax_scale = float(pairs_per_query[a])
            for m in MODALITIES:
                grid_grads[(a, m)] += softmax_scale * np.exp(blocks[(a, m)] - row_log_z[a][:, None])
        for a, b in cfg.pair_set:
            diag = np.diagonal(blocks[(a, b)])
            term_losses = row_log_z[a] - diag
            term_sum = float(np.sum(term_losses))
            per_term[pair_name((a, b))] = term_sum / n
            total += term_sum
            grid_grads[(a, b)][np.arange(n), np.arange(n)] -= 1.0

    normalization = cfg.resolve_normalization(n)
    grads, grad_tau = _assemble_embedding_grads(grid_grads, rows, tau, 1.0 / normalization)
    return LossOutput(value=total / normalization, per_term=per_term, grads=grads, grad_tau=grad_tau)


def cl_loss(
    images: EmbeddingMatrix,
    texts: EmbeddingMatrix,
    cfg: LossConfig | None = None,
) -> LossOutput:
    """Standard two-direction contrastive loss.

    Each direction's denominator is the single cross-modality row: anchor j
    of modality a against all N candidates of the opposite modality. No
    same-modality or fused negatives. Normalization defaults to 2N.
    """
    cfg = cfg if cfg is not None else LossConfig(pair_set=CL_PAIR_SET)
    if set(cfg.pair_set) != set(CL_PAIR_SET):
        raise ConfigError(
            f"cl_loss is defined for the pair set {{i2t, t2i}}, got {[pair_name(p) for p in cfg.pair_set]}"
        )
    if images.rows.shape != texts.rows.shape:
        raise ShapeMismatchError(f"image/text shapes disagree: {images.rows.shape} vs {texts.rows.shape}")
    n = images.n
    tau = cfg.tau
    rows = {
        Modality.IMAGE: images.rows,
        Modality.TEXT: texts.rows,
        Modality.FUSED: np.zeros_like(images.rows),
    }
    s_it = rows[Modality.IMAGE] @ rows[Modality.TEXT].T / tau

    grid_grads: dict[tuple[Modality, Modality], np.ndarray] = {}
    per_term: dict[str, float] = {}
    total = 0.0
    for a, b, s in ((_I, _T, s_it), (_T, _I, s_it.T)):
        log_z = _logsumexp_rows(s)
        diag = np.diagonal(s)
        term_sum = float(np.sum(log_z - diag))
        per_term[pair_name((a, b))] = term_sum / n
        total += term_sum
        g = np.exp(s - log_z[:, None])
        g[np.arange(n), np.arange(n)] -= 1.0
        grid_grads[(a, b)] = g

    normalization = cfg.resolve_normalization(n)
    grads, grad_tau = _assemble_embedding_grads(grid_grads, rows, tau, 1.0 / normalization)
    return LossOutput(value=total / normalization, per_term=per_term, grads=grads, grad_tau=grad_tau)


def gcl_loss_ablation(
    batch: TripletBatch,
    drop: str,
    cfg: LossConfig | None = None,
) -> LossOutput:
    """Generalized loss with one named pair group removed.

    drop is one of 'cross_modal' (removes i2t, t2i), 'it_candidate' (removes
    i2it, t2it), or 'it_query' (removes it2i, it2t). Normalization is fixed
    at 4N for the four retained pairs; tau and denominator mode come from
    cfg when given.
    """
    if drop not in ABLATION_DROPS:
        raise ConfigError(f"unknown ablation {drop!r}; expected one of {sorted(ABLATION_DROPS)}")
    base = cfg if cfg is not None else LossConfig()
    dropped = set(ABLATION_DROPS[drop])
    kept = tuple(p for p in FULL_PAIR_SET if p not in dropped)
    ablated = replace(base, pair_set=kept, normalization=float(4 * batch.n))
    return gcl_loss(batch, ablated)


def intra_modality_separation_loss(
    images: EmbeddingMatrix,
    texts: EmbeddingMatrix,
    cfg: LossConfig | None = None,
) -> LossOutput:
    """Standard contrastive loss plus a same-modality separation term.

    For each anchor of modality a, the added term keeps the cross-modal
    positive as numerator and contrasts it against the anchor's own row of
    same-modality similarities (k != j). Both parts are normalized by 2N.
    Requires N >= 2 so the separation term has at least one negative.
    """
    cfg = cfg if cfg is not None else LossConfig(pair_set=CL_PAIR_SET)
    if set(cfg.pair_set) != set(CL_PAIR_SET):
        raise ConfigError(
            f"intra_modality_separation_loss uses the pair set {{i2t, t2i}}, got "
            f"{[pair_name(p) for p in cfg.pair_set]}"
        )
    if images.rows.shape != texts.rows.shape:
        raise ShapeMismatchError(f"image/text shapes disagree: {images.rows.shape} vs {texts.rows.shape}")
    n = images.n
    if n < 2:
        raise BatchTooSmallError(f"separation term needs N >= 2 same-modality rows, got N={n}")
    tau = cfg.tau
    rows = {
        Modality.IMAGE: images.rows,
        Modality.TEXT: texts.rows,
        Modality.FUSED: np.zeros_like(images.rows),
    }
    cl_part = cl_loss(images, texts, cfg)

    grid_grads = {
        (_I, _I): np.zeros((n, n)),
        (_T, _T): np.zeros((n, n)),
        (_I, _T): np.zeros((n, n)),
        (_T, _I): np.zeros((n, n)),
    }
    s_it = rows[_I] @ rows[_T].T / tau
    per_term = dict(cl_part.per_term)
    sep_total = 0.0
    offdiag = _offdiag_mask(n)
    for a, b, s_pos in ((_I, _T, s_it), (_T, _I, s_it.T)):
        s_same = rows[a] @ rows[a].T / tau
        diag = np.diagonal(s_pos)
        # row-wise same-modality negatives, self-similarity dropped before
        # the stable reduction (never an additive -inf sentinel)
        neg_compact = s_same[offdiag].reshape(n, n - 1)
        neg_log = _logsumexp_rows(neg_compact)
        log_z = np.logaddexp(diag, neg_log)
        term_sum = float(np.sum(log_z - diag))
        per_term[f"sep_{a.code}"] = term_sum / n
        sep_total += term_sum
        q = np.exp(diag - log_z)
        grid_grads[(a, b)][np.arange(n), np.arange(n)] += q - 1.0
        g_same = np.zeros((n, n))
        g_same[offdiag] = np.exp(neg_compact - log_z[:, None]).ravel()
        grid_grads[(a, a)] += g_same

    normalization = cfg.resolve_normalization(n)
    sep_grads, sep_grad_tau = _assemble_embedding_grads(grid_grads, rows, tau, 1.0 / normalization)
    return LossOutput(
        value=cl_part.value + sep_total / normalization,
        per_term=per_term,
        grads=LossGrads(
            images=cl_part.grads.images + sep_grads.images,
            texts=cl_part.grads.texts + sep_grads.texts,
            fused=np.zeros_like(images.rows),
        ),
        grad_tau=cl_part.grad_tau + sep_grad_tau,
    )


def loss_gradient_check(
    loss_fn: Callable[[TripletBatch], LossOutput],
    batch: TripletBatch,
    epsilon: float = 1e-5,
) -> float:
    """Compare analytic gradients against central finite differences.

    Perturbs every coordinate of every matrix by +-epsilon and returns the
    maximum relative error max(|analytic - numeric| / max(1, |analytic|,
    |numeric|)) over all coordinates. A constant loss yields exactly 0.
    """
    if not (1e-7 <= epsilon <= 1e-3):
        raise ConfigError(f"epsilon must lie in [1e-7, 1e-3], got {epsilon}")
    out = loss_fn(batch)
    mats = {
        "images": batch.images.rows,
        "texts": batch.texts.rows,
        "fused": batch.fused.rows,
    }
    analytic = {
        "images": out.grads.images,
        "texts": out.grads.texts,
        "fused": out.grads.fused,
    }

    def rebuild(name: str, perturbed: np.ndarray) -> TripletBatch:
        parts = dict(mats)
        parts[name] = perturbed
        return TripletBatch.from_rows(parts["images"], parts["texts"], parts["fused"], validate_norms=False)

    max_rel = 0.0
    for name, base in mats.items():
        for idx in np.ndindex(base.shape):
            plus = base.copy()
            plus[idx] += epsilon
            minus = base.copy()
            minus[idx] -= epsilon
            f_plus = loss_fn(rebuild(name, plus)).value
            f_minus = loss_fn(rebuild(name, minus)).value
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            a = float(analytic[name][idx])
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            max_rel = max(max_rel, rel)
    return max_rel
