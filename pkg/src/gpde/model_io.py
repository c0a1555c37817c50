"""Self-describing JSON serialization for expert pools and model bundles.

An *expert pool* file stores one shared hyperparameter triple (in log-space)
plus references to the dataset CSVs it was trained on; features are reloaded
from those files rather than embedded, and the cached factorizations are
rebuilt deterministically on load.  A *model bundle* references a source pool
and a target pool together with the combination weights and the decision
mode.  Dataset paths are stored relative to the JSON file so a pool directory
can be moved as a unit.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .data import config_hash, load_dataset
from .exceptions import DataLoadError
from .experts import GpdeModel, uniform_betas
from .gp_core import Dataset, Expert, train_expert
from .kernel import Hyperparams

__all__ = [
    "save_expert_pool",
    "load_expert_pool",
    "load_experts",
    "save_bundle",
    "load_bundle",
]

POOL_KIND = "gpde_expert_pool"
BUNDLE_KIND = "gpde_model_bundle"


def _write_json(path, payload: dict) -> None:
    payload = dict(payload)
    payload["config_hash"] = config_hash({k: v for k, v in sorted(payload.items())})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path, kind: str) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataLoadError(f"{path}: {exc}") from None
    if payload.get("kind") != kind:
        raise DataLoadError(f"{path}: expected kind {kind!r}, got {payload.get('kind')!r}")
    return payload


def save_expert_pool(path, hyper: Hyperparams, dataset_paths: list[tuple[str, str]],
                     seed: int | None = None) -> None:
    """Write a pool file for ``hyper`` over ``dataset_paths`` [(domain_id, csv_path)]."""
    base = os.path.dirname(os.path.abspath(path))
    log_ell, log_sf, log_sv = hyper.to_log()
    _write_json(path, {
        "kind": POOL_KIND,
        "hyperparams": {
            "log_length_scale": log_ell,
            "log_signal_std": log_sf,
            "log_noise_std": log_sv,
        },
        "domains": [
            {"domain_id": domain_id, "path": os.path.relpath(os.path.abspath(p), base)}
            for domain_id, p in dataset_paths
        ],
        "seed": seed,
    })


def load_expert_pool(path) -> tuple[Hyperparams, list[Dataset]]:
    """Read a pool file and reload its referenced datasets."""
    payload = _read_json(path, POOL_KIND)
    try:
        hp = payload["hyperparams"]
        hyper = Hyperparams.from_log(
            [hp["log_length_scale"], hp["log_signal_std"], hp["log_noise_std"]]
        )
        domains = payload["domains"]
    except (KeyError, TypeError) as exc:
        raise DataLoadError(f"{path}: malformed pool file ({exc})") from None
    base = os.path.dirname(os.path.abspath(path))
    datasets = [
        load_dataset(os.path.join(base, d["path"]), domain_id=d["domain_id"]) for d in domains
    ]
    return hyper, datasets


def load_experts(path) -> list[Expert]:
    """Load a pool and rebuild its experts (deterministic refactorization)."""
    hyper, datasets = load_expert_pool(path)
    return [train_expert(d, hyper) for d in datasets]


def save_bundle(path, sources_pool: str | None, target_pool: str | None,
                betas=None, mode: str = "multilabel", seed: int | None = None) -> None:
    """Write a bundle referencing a source pool and/or a target pool."""
    base = os.path.dirname(os.path.abspath(path))
    rel = lambda p: os.path.relpath(os.path.abspath(p), base) if p else None
    _write_json(path, {
        "kind": BUNDLE_KIND,
        "sources": rel(sources_pool),
        "target": rel(target_pool),
        "betas": None if betas is None else [float(b) for b in np.asarray(betas).ravel()],
        "mode": mode,
        "seed": seed,
    })


def load_bundle(path) -> GpdeModel:
    """Reassemble a :class:`GpdeModel` from a bundle file."""
    payload = _read_json(path, BUNDLE_KIND)
    base = os.path.dirname(os.path.abspath(path))
    join = lambda p: os.path.join(base, p)
    sources: list[Expert] = []
    if payload.get("sources"):
        sources = load_experts(join(payload["sources"]))
    target = None
    if payload.get("target"):
        target_experts = load_experts(join(payload["target"]))
        if len(target_experts) != 1:
            raise DataLoadError(f"{path}: target pool must contain exactly one domain")
        target = target_experts[0]
    betas = payload.get("betas")
    if betas is None:
        betas = uniform_betas(len(sources) + (1 if target else 0))
    return GpdeModel(sources=sources, target=target, betas=np.asarray(betas, dtype=float),
                     mode=payload.get("mode", "multilabel"))
