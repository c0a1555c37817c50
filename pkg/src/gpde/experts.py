"""Domain-expert pools: shared-hyperparameter source GPs, a target GP, and
precision-weighted fusion of their predictions.

Training factorizes across domains: all source datasets share one
hyperparameter triple (fit on the sum of their marginal likelihoods) while
the target expert gets its own.  At prediction time each source expert is
corrected toward the target training data (see :mod:`gpde.adaptation`), the
target expert predicts directly, and the experts are combined as a weighted
product of Gaussians:

    fused_var  = [sum_i beta_i / var_i]^-1
    fused_mean = fused_var * sum_i beta_i * mean_i / var_i

so confident (low-variance) experts dominate.  Hard labels come from the
sign of the fused mean per output, or the argmax across outputs in
multi-class mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adaptation import AdaptedExpert
from .exceptions import InvalidInputError
from .gp_core import (
    Dataset,
    Expert,
    Hyperparams,
    OptimizerOptions,
    fit,
    posterior,
    train_expert,
)

__all__ = [
    "VARIANCE_FLOOR",
    "GpdeModel",
    "FusedPrediction",
    "uniform_betas",
    "train_source_experts",
    "train_target_expert",
    "train_gpde",
    "retarget",
    "fuse",
    "hard_labels",
    "predict",
    "expert_weights",
]

# Predictive variances are clamped here before inversion; never divided raw.
VARIANCE_FLOOR = 1e-10

MODES = ("multilabel", "multiclass")


def uniform_betas(n_experts: int) -> np.ndarray:
    """Equal expert weights 1/n, the default combination rule."""
    if n_experts < 1:
        raise InvalidInputError("need at least one expert")
    return np.full(n_experts, 1.0 / n_experts)


@dataclass(frozen=True)
class GpdeModel:
    """Trained expert pool: M source experts, an optional target expert, and
    normalized combination weights (ordered sources first, target last)."""

    sources: list[Expert]
    target: Expert | None
    betas: np.ndarray
    mode: str = "multilabel"

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=float)
        object.__setattr__(self, "betas", betas)
        n = self.n_experts
        if n == 0:
            raise InvalidInputError("model needs at least one expert")
        if betas.shape != (n,):
            raise InvalidInputError(f"betas must have one entry per expert ({n}), got {betas.shape}")
        if np.any(betas < 0):
            raise InvalidInputError("betas must be nonnegative")
        if abs(float(betas.sum()) - 1.0) > 1e-12:
            raise InvalidInputError(f"betas must sum to 1, got {betas.sum()!r}")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        experts = list(self.sources) + ([self.target] if self.target else [])
        dim, n_out = experts[0].data.dim, experts[0].data.n_outputs
        for e in experts:
            if e.data.dim != dim or e.data.n_outputs != n_out:
                raise InvalidInputError("all experts must share feature and output dimensions")
        for e in self.sources[1:]:
            if e.hyper != self.sources[0].hyper:
                raise InvalidInputError("source experts must share identical hyperparameters")

    @property
    def n_experts(self) -> int:
        return len(self.sources) + (1 if self.target is not None else 0)

    @property
    def dim(self) -> int:
        first = self.sources[0] if self.sources else self.target
        return first.data.dim

    @property
    def n_outputs(self) -> int:
        first = self.sources[0] if self.sources else self.target
        return first.data.n_outputs


@dataclass(frozen=True)
class FusedPrediction:
    """Fused mean/variance plus the per-expert predictions behind them.

    ``per_expert_means`` and ``per_expert_variances`` are ordered like the
    model's experts (sources first, target last).  ``labels`` holds the hard
    {-1, +1} decisions.
    """

    mean: np.ndarray
    variance: np.ndarray
    per_expert_means: list[np.ndarray] = field(repr=False)
    per_expert_variances: list[np.ndarray] = field(repr=False)
    labels: np.ndarray = field(default=None)


def train_source_experts(
    source_datasets: list[Dataset],
    init: Hyperparams | None = None,
    opts: OptimizerOptions | None = None,
) -> list[Expert]:
    """Fit one shared hyperparameter triple over all source datasets and
    train an expert per dataset with it."""
    shared = fit(source_datasets, init=init, opts=opts)
    return [train_expert(d, shared) for d in source_datasets]


def train_target_expert(
    target_dataset: Dataset,
    init: Hyperparams | None = None,
    opts: OptimizerOptions | None = None,
) -> Expert:
    """Fit hyperparameters on the target data alone and train its expert."""
    return train_expert(target_dataset, fit([target_dataset], init=init, opts=opts))


def train_gpde(
    source_datasets: list[Dataset],
    target_dataset: Dataset | None,
    init: Hyperparams | None = None,
    opts: OptimizerOptions | None = None,
    betas: np.ndarray | None = None,
    mode: str = "multilabel",
    source_experts: list[Expert] | None = None,
) -> GpdeModel:
    """Train the full expert pool.

    Source experts are independent of the target, so a pre-trained list can
    be passed via ``source_experts`` to adapt the same pool to a new target
    domain without refitting.  ``target_dataset=None`` builds a source-only
    pool.  Weights default to uniform over the experts present.
    """
    if source_experts is None:
        source_experts = (
            train_source_experts(source_datasets, init=init, opts=opts) if source_datasets else []
        )
    target = (
        train_target_expert(target_dataset, init=init, opts=opts)
        if target_dataset is not None else None
    )
    if betas is None:
        betas = uniform_betas(len(source_experts) + (1 if target is not None else 0))
    return GpdeModel(sources=source_experts, target=target, betas=betas, mode=mode)


def retarget(
    model: GpdeModel,
    target_dataset: Dataset,
    init: Hyperparams | None = None,
    opts: OptimizerOptions | None = None,
) -> GpdeModel:
    """Adapt a trained pool to a new target domain, reusing the source
    experts unchanged."""
    target = train_target_expert(target_dataset, init=init, opts=opts)
    return GpdeModel(sources=model.sources, target=target, betas=model.betas, mode=model.mode)


def fuse(
    expert_means: list[np.ndarray],
    expert_variances: list[np.ndarray],
    betas,
) -> tuple[np.ndarray, np.ndarray]:
    """Combine per-expert predictions by normalized precision.

    Parameters
    ----------
    expert_means : list of (M_test x C) arrays
    expert_variances : list of (M_test,) arrays
        Clamped at ``VARIANCE_FLOOR`` before inversion.
    betas : array-like, nonnegative, summing to 1

    Returns
    -------
    mean : ndarray, (M_test x C)
    variance : ndarray, (M_test,)
    """
    if not expert_means or len(expert_means) != len(expert_variances):
        raise InvalidInputError("expert mean/variance lists must be nonempty and aligned")
    betas = np.asarray(betas, dtype=float)
    if betas.shape != (len(expert_means),):
        raise InvalidInputError("betas must align with the expert lists")
    if np.any(betas < 0) or abs(float(betas.sum()) - 1.0) > 1e-9:
        raise InvalidInputError("betas must be nonnegative and sum to 1")
    means = [np.atleast_2d(np.asarray(m, dtype=float)) for m in expert_means]
    variances = [
        np.maximum(np.asarray(v, dtype=float).ravel(), VARIANCE_FLOOR) for v in expert_variances
    ]
    active = [i for i in range(len(means)) if betas[i] > 0.0]
    if not active:
        raise InvalidInputError("at least one beta must be positive")
    if len(active) == 1:  # single-expert degeneracy is exact, no double rounding
        i = active[0]
        return means[i].copy(), variances[i].copy()
    precision = np.zeros_like(variances[0])
    weighted = np.zeros_like(means[0])
    for i in active:
        p = betas[i] / variances[i]
        precision += p
        weighted += p[:, None] * means[i]
    variance = 1.0 / precision
    mean = variance[:, None] * weighted
    return mean, variance


def hard_labels(mean: np.ndarray, mode: str) -> np.ndarray:
    """Decision rule on a fused mean matrix.

    multilabel: per-output sign, with sign(0) fixed to +1.
    multiclass: argmax across the C outputs, emitted one-hot in {-1, +1}.
    """
    mean = np.atleast_2d(mean)
    if mode == "multilabel":
        return np.where(mean >= 0.0, 1.0, -1.0)
    if mode == "multiclass":
        labels = -np.ones_like(mean)
        labels[np.arange(mean.shape[0]), np.argmax(mean, axis=1)] = 1.0
        return labels
    raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")


def _per_expert_predictions(model: GpdeModel, X_star: np.ndarray):
    """Adapted source predictions plus the target expert's own, in model order.

    Without a target expert there is nothing to condition on, so the source
    experts predict unadapted.
    """
    preds = []
    for src in model.sources:
        if model.target is not None:
            preds.append(AdaptedExpert(src, model.target.data).posterior(X_star))
        else:
            preds.append(posterior(src, X_star))
    if model.target is not None:
        preds.append(posterior(model.target, X_star))
    return preds


def predict(model: GpdeModel, X_star) -> FusedPrediction:
    """Fused prediction at ``X_star`` with per-expert detail and hard labels."""
    X_star = np.asarray(X_star, dtype=float)
    if X_star.ndim == 1:
        X_star = X_star[None, :]
    preds = _per_expert_predictions(model, X_star)
    means = [p.mean for p in preds]
    variances = [p.variance for p in preds]
    mean, variance = fuse(means, variances, model.betas)
    return FusedPrediction(
        mean=mean,
        variance=variance,
        per_expert_means=means,
        per_expert_variances=variances,
        labels=hard_labels(mean, model.mode),
    )


def expert_weights(model: GpdeModel, x_star) -> np.ndarray:
    """Per-expert importance at the query points: beta_i / var_i, normalized
    to sum to 1 (sources first, target last).

    Accepts a single point (returns shape ``(n_experts,)``) or a batch
    (returns ``(M_test, n_experts)``).
    """
    x_star = np.asarray(x_star, dtype=float)
    single = x_star.ndim == 1
    X = x_star[None, :] if single else x_star
    preds = _per_expert_predictions(model, X)
    precisions = np.stack(
        [model.betas[i] / np.maximum(p.variance, VARIANCE_FLOOR) for i, p in enumerate(preds)],
        axis=1,
    )
    weights = precisions / precisions.sum(axis=1, keepdims=True)
    return weights[0] if single else weights
