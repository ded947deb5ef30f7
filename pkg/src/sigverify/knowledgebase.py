"""JSON persistence of enrolled user models.

Only the per-cluster interval references, the selected feature indices and
the normalization are stored; training samples never are.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping

from .errors import (ContractError, CorruptModelError, KnowledgebaseError,
                     KnowledgebaseNotFoundError, VersionError)
from .symbolic_model import ModelStore, ReferenceInterval, UserModel

FORMAT_VERSION = "1"
FIXED_TIME = "1970-01-01T00:00:00Z"


def timestamp(fixed_time=False) -> str:
    if fixed_time:
        return FIXED_TIME
    return datetime.now(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class Knowledgebase:
    models: ModelStore = field(default_factory=ModelStore)
    created: str = FIXED_TIME
    config: Mapping = field(default_factory=dict)
    version: str = FORMAT_VERSION

    def __len__(self):
        return len(self.models)

    @property
    def reference_count(self) -> int:
        return sum(len(self.models[u].references) for u in self.models)


def model_to_dict(model: UserModel) -> dict:
    return {
        "user_id": model.user_id,
        "selected_indices": [int(i) for i in model.selected_indices],
        "normalization": {
            "mean": [float(v) for v in model.mean],
            "scale": [float(v) for v in model.scale],
        },
        "alpha": float(model.alpha),
        "tau": float(model.tau),
        "references": [
            {
                "cluster_id": int(ref.cluster_id),
                "member_count": int(ref.member_count),
                "intervals": [[float(lo), float(hi)] for lo, hi in zip(ref.lower, ref.upper)],
            }
            for ref in model.references
        ],
    }


def _finite_list(values, what):
    out = [float(v) for v in values]
    if not all(math.isfinite(v) for v in out):
        raise CorruptModelError(f"{what} holds a non-finite number")
    return out


def model_from_dict(doc) -> UserModel:
    """Rebuild a :class:`UserModel`, re-checking every invariant."""
    try:
        user_id = doc["user_id"]
        if not isinstance(user_id, str) or not user_id:
            raise CorruptModelError("user_id must be a non-empty string")
        idx = [int(i) for i in doc["selected_indices"]]
        mean = _finite_list(doc["normalization"]["mean"], f"{user_id}: mean")
        scale = _finite_list(doc["normalization"]["scale"], f"{user_id}: scale")
        if len(mean) != len(scale):
            raise CorruptModelError(f"{user_id}: mean and scale differ in length")
        if any(s <= 0 for s in scale):
            raise CorruptModelError(f"{user_id}: scale entries must be positive")
        if len(set(idx)) != len(idx) or any(not 0 <= i < len(mean) for i in idx):
            raise CorruptModelError(f"{user_id}: selected indices must be distinct and in range")
        alpha = float(doc["alpha"])
        tau = float(doc["tau"])
        if not alpha >= 0 or not 0 <= tau <= 1:
            raise CorruptModelError(f"{user_id}: alpha must be >= 0 and tau in [0, 1]")
        refs = []
        for r in doc["references"]:
            pairs = r["intervals"]
            if any(len(p) != 2 for p in pairs):
                raise CorruptModelError(f"{user_id}: intervals must be [lo, hi] pairs")
            lo = _finite_list([p[0] for p in pairs], f"{user_id}: interval bound")
            hi = _finite_list([p[1] for p in pairs], f"{user_id}: interval bound")
            refs.append(ReferenceInterval(lo, hi, int(r["cluster_id"]), int(r["member_count"])))
        return UserModel(user_id, idx, mean, scale, alpha, refs, tau)
    except CorruptModelError:
        raise
    except ContractError as exc:
        raise CorruptModelError(f"model {doc.get('user_id', '?')!r}: {exc}") from exc
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptModelError(f"malformed model entry: {exc!r}") from exc


def to_json(kb: Knowledgebase) -> str:
    doc = {
        "version": kb.version,
        "created": kb.created,
        "config": dict(kb.config),
        "models": [model_to_dict(kb.models[u]) for u in kb.models],
    }
    # json writes floats with repr, which round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def from_json(text: str) -> Knowledgebase:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModelError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptModelError("knowledgebase must be a JSON object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported knowledgebase version {version!r}, "
                           f"expected {FORMAT_VERSION!r}")
    models = doc.get("models")
    if not isinstance(models, list):
        raise CorruptModelError("'models' must be a list")
    store = ModelStore()
    for entry in models:
        model = model_from_dict(entry)
        if model.user_id in store:
            raise CorruptModelError(f"duplicate user_id {model.user_id!r}")
        store.add(model)
    return Knowledgebase(store, str(doc.get("created", FIXED_TIME)),
                         doc.get("config") or {}, version)


def save_knowledgebase(kb: Knowledgebase, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_json(kb))
    except OSError as exc:
        raise KnowledgebaseError(f"{path}: cannot write knowledgebase ({exc.strerror})") from exc


def load_knowledgebase(path) -> Knowledgebase:
    if not os.path.exists(path):
        raise KnowledgebaseNotFoundError(f"{path}: knowledgebase not found")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise KnowledgebaseError(f"{path}: cannot read knowledgebase ({exc.strerror})") from exc
    try:
        return from_json(text)
    except KnowledgebaseError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
