"""Signature corpora: CSV loading, synthetic generation and trial splits.

A corpus is a flat table of global-feature vectors, one row per signature::

    user_id,sample_id,label,f0001,...,f0050

``label`` is ``genuine`` or ``skilled_forgery``. Synthetic corpora carry a
JSON sidecar listing the planted discriminative features of every user.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, ContractError, EmptyCorpusError, ParseError, ProtocolError

GENUINE = "genuine"
SKILLED_FORGERY = "skilled_forgery"
LABELS = (GENUINE, SKILLED_FORGERY)


def feature_name(index: int) -> str:
    """Column name of the zero-based feature ``index`` (``f0001`` for 0)."""
    return f"f{index + 1:04d}"


@dataclass(frozen=True, eq=False)
class SignatureSample:
    user_id: str
    sample_id: int
    label: str
    features: np.ndarray

    def __post_init__(self):
        if self.label not in LABELS:
            raise ContractError(f"unknown label {self.label!r}")
        arr = np.array(self.features, dtype=float)
        if arr.ndim != 1:
            raise ContractError("features must be a 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ContractError("features must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "features", arr)

    @property
    def is_genuine(self) -> bool:
        return self.label == GENUINE


class Dataset:
    """Immutable collection of signature samples sharing one feature count."""

    def __init__(self, samples: Sequence[SignatureSample]):
        samples = tuple(samples)
        if not samples:
            raise EmptyCorpusError("corpus holds no samples")
        k = samples[0].features.shape[0]
        for s in samples:
            if s.features.shape[0] != k:
                raise ContractError(
                    f"sample {s.user_id}/{s.sample_id} has {s.features.shape[0]} "
                    f"features, expected {k}")
        users: dict[str, None] = {}
        for s in samples:
            users.setdefault(s.user_id, None)
        self._samples = samples
        self._feature_count = k
        self._users = tuple(users)
        self._by_user: dict[str, tuple[list, list]] = {u: ([], []) for u in users}
        for s in samples:
            self._by_user[s.user_id][0 if s.is_genuine else 1].append(s)
        for u, (gen, _) in self._by_user.items():
            if not gen:
                raise ContractError(f"user {u!r} has no genuine samples")

    @property
    def samples(self) -> tuple[SignatureSample, ...]:
        return self._samples

    @property
    def feature_count(self) -> int:
        return self._feature_count

    @property
    def users(self) -> tuple[str, ...]:
        return self._users

    def __len__(self):
        return len(self._samples)

    def genuine(self, user_id: str) -> tuple[SignatureSample, ...]:
        return tuple(self._by_user[user_id][0])

    def forgeries(self, user_id: str) -> tuple[SignatureSample, ...]:
        return tuple(self._by_user[user_id][1])

    def matrix(self) -> np.ndarray:
        return np.vstack([s.features for s in self._samples])


# ---------------------------------------------------------------------------
# CSV I/O


def _parse_header(header, path, labelled):
    fixed = ["user_id", "sample_id"] + (["label"] if labelled else [])
    if header[: len(fixed)] != fixed:
        raise ParseError(f"header must start with {','.join(fixed)}", line=1, path=path)
    feats = header[len(fixed):]
    if not feats:
        raise ParseError("header declares no feature columns", line=1, path=path)
    for i, name in enumerate(feats):
        if name != feature_name(i):
            raise ParseError(
                f"feature column {i + 1} is {name!r}, expected {feature_name(i)!r}",
                line=1, path=path)
    return len(fixed), len(feats)


def read_samples(path, labelled: bool = True) -> list[SignatureSample]:
    """Parse a corpus-schema CSV into samples.

    With ``labelled=False`` the ``label`` column is absent (single test
    signatures handed to ``verify``) and every row is read as genuine.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyCorpusError("file is empty", path=path) from None
        header = [h.strip() for h in header]
        offset, k = _parse_header(header, path, labelled)
        samples = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != offset + k:
                raise ParseError(
                    f"expected {offset + k} fields, found {len(row)}", line=line, path=path)
            user_id = row[0].strip()
            if not user_id:
                raise ParseError("empty user_id", line=line, path=path)
            try:
                sample_id = int(row[1])
            except ValueError:
                raise ParseError(f"sample_id {row[1]!r} is not an integer",
                                 line=line, path=path) from None
            if sample_id < 0:
                raise ParseError("sample_id must be non-negative", line=line, path=path)
            label = row[2].strip() if labelled else GENUINE
            if label not in LABELS:
                raise ParseError(f"unknown label {label!r}", line=line, path=path)
            try:
                values = [float(v) for v in row[offset:]]
            except ValueError as exc:
                raise ParseError(f"bad feature value ({exc})", line=line, path=path) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite feature value", line=line, path=path)
            samples.append(SignatureSample(user_id, sample_id, label, np.array(values)))
    if not samples:
        raise EmptyCorpusError("corpus holds a header but no samples", path=path)
    return samples


def load_dataset(path) -> Dataset:
    return Dataset(read_samples(path, labelled=True))


def write_dataset(dataset: Dataset, path) -> None:
    """Write ``dataset`` as CSV; floats use their shortest round-trip repr."""
    k = dataset.feature_count
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user_id", "sample_id", "label"] + [feature_name(i) for i in range(k)])
        for s in dataset.samples:
            writer.writerow([s.user_id, s.sample_id, s.label] + [repr(float(v)) for v in s.features])


# ---------------------------------------------------------------------------
# Synthetic corpora


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the planted-feature generator.

    Genuine signatures of a user are drawn around a user mean (entries of
    scale ``mean_scale``) with spread ``noise`` on the planted features and
    ``spread * noise`` elsewhere. Skilled forgeries keep the user mean but sit
    ``separation * noise`` away from it on every planted feature.

    The style knobs are off by default. With ``n_styles > 1`` the genuine
    samples cycle through writing styles: per-style offsets spanning
    ``style_scale * noise`` on the planted features and
    ``background_style * spread * noise`` on the rest.
    """

    n_users: int = 20
    genuine_per_user: int = 25
    forgery_per_user: int = 25
    n_features: int = 50
    n_planted: int = 5
    separation: float = 4.0
    noise: float = 1.0
    n_styles: int = 1
    style_scale: float = 0.0
    spread: float = 3.0
    mean_scale: float = 10.0
    background_style: float = 0.0

    def validate(self):
        if self.n_users < 1 or self.genuine_per_user < 1 or self.forgery_per_user < 1:
            raise ConfigError("user and sample counts must be >= 1")
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        if not 1 <= self.n_planted <= self.n_features:
            raise ConfigError(
                f"n_planted={self.n_planted} must lie in [1, n_features={self.n_features}]")
        if self.separation < 0 or self.noise <= 0:
            raise ConfigError("separation must be >= 0 and noise > 0")
        if (self.n_styles < 1 or self.style_scale < 0 or self.spread <= 0
                or self.mean_scale < 0 or self.background_style < 0):
            raise ConfigError("style/spread parameters out of range")


@dataclass(frozen=True)
class SyntheticGroundTruth:
    planted: Mapping[str, tuple[int, ...]]

    def to_json(self) -> str:
        return json.dumps({"users": {u: list(ix) for u, ix in self.planted.items()}},
                          indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SyntheticGroundTruth":
        doc = json.loads(text)
        return cls({u: tuple(int(i) for i in ix) for u, ix in doc["users"].items()})


def _style_levels(n):
    return np.linspace(-0.5, 0.5, n) if n > 1 else np.zeros(1)


def generate_synthetic(config: GeneratorConfig, seed: int):
    """Draw a corpus with user-specific discriminative features.

    Returns ``(dataset, ground_truth)``; identical ``(config, seed)`` yield
    identical corpora.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    k, dp = config.n_features, config.n_planted
    width = max(2, len(str(config.n_users)))
    samples = []
    truth = {}
    for u in range(config.n_users):
        user_id = f"u{u + 1:0{width}d}"
        planted = np.sort(rng.choice(k, size=dp, replace=False))
        mean = rng.normal(0.0, config.mean_scale, size=k)
        # evenly spaced style levels, shuffled independently per planted feature
        unit = _style_levels(config.n_styles)
        levels = unit * config.style_scale * config.noise
        styles = np.stack([rng.permutation(levels) for _ in range(dp)], axis=1)
        background = (np.stack([rng.permutation(unit) for _ in range(k)], axis=1)
                      * config.background_style * config.spread * config.noise)
        signs = rng.choice([-1.0, 1.0], size=dp)
        truth[user_id] = tuple(int(i) for i in planted)

        def draw(i, displacement):
            x = (mean + background[i % config.n_styles]
                 + config.spread * config.noise * rng.standard_normal(k))
            style = styles[i % config.n_styles]
            x[planted] = (mean[planted] + style + displacement
                          + config.noise * rng.standard_normal(dp))
            return x

        sid = 0
        for i in range(config.genuine_per_user):
            samples.append(SignatureSample(user_id, sid, GENUINE, draw(i, 0.0)))
            sid += 1
        shift = config.separation * config.noise * signs
        for i in range(config.forgery_per_user):
            samples.append(SignatureSample(user_id, sid, SKILLED_FORGERY, draw(i, shift)))
            sid += 1
    return Dataset(samples), SyntheticGroundTruth(truth)


# ---------------------------------------------------------------------------
# Protocols


class Protocol(str, enum.Enum):
    SKILLED_05 = "Skilled_05"
    SKILLED_20 = "Skilled_20"
    RANDOM_05 = "Random_05"
    RANDOM_20 = "Random_20"

    @property
    def train_count(self) -> int:
        return 5 if self.value.endswith("_05") else 20

    @property
    def skilled(self) -> bool:
        return self.value.startswith("Skilled")

    @property
    def default_d(self) -> int:
        # feature counts at which the published minima were reported
        return 60 if self.train_count == 5 else 50

    @classmethod
    def parse(cls, name) -> "Protocol":
        if isinstance(name, cls):
            return name
        for p in cls:
            if p.value.lower() == str(name).lower():
                return p
        raise ConfigError(f"unknown protocol {name!r}; choose from "
                          + ", ".join(p.value.lower() for p in cls))


@dataclass(frozen=True, eq=False)
class TrialSplit:
    """Per-user train/test partition for one trial of one protocol.

    ``test_forgery[u]`` holds the impostor attempts *claiming* identity ``u``.
    """

    protocol: Protocol
    train: Mapping[str, tuple[SignatureSample, ...]]
    test_genuine: Mapping[str, tuple[SignatureSample, ...]]
    test_forgery: Mapping[str, tuple[SignatureSample, ...]]
    trial_seed: int
    users: tuple[str, ...] = field(default=())


def make_trial_split(dataset: Dataset, protocol, trial_seed: int) -> TrialSplit:
    """Randomly partition each user's genuine samples per ``protocol``.

    The training draw of user ``i`` depends only on ``(trial_seed, i, train
    count)``, so a Skilled and a Random protocol with the same training size
    share training subsets when given the same ``trial_seed``.
    """
    protocol = Protocol.parse(protocol)
    n_train = protocol.train_count
    for u in dataset.users:
        have = len(dataset.genuine(u))
        if have < n_train:
            raise ProtocolError(
                f"user {u!r} has {have} genuine samples; {protocol.value} needs {n_train}")

    train, test_gen, test_forg = {}, {}, {}
    for i, u in enumerate(dataset.users):
        gen = dataset.genuine(u)
        rng = np.random.default_rng([trial_seed, i, n_train])
        chosen = np.sort(rng.choice(len(gen), size=n_train, replace=False))
        mask = np.zeros(len(gen), dtype=bool)
        mask[chosen] = True
        train[u] = tuple(gen[j] for j in chosen)
        test_gen[u] = tuple(g for g, m in zip(gen, mask) if not m)

    for i, u in enumerate(dataset.users):
        if protocol.skilled:
            test_forg[u] = dataset.forgeries(u)
        else:
            rng = np.random.default_rng([trial_seed, i, 1_000_003])
            picks = []
            for v in dataset.users:
                if v == u:
                    continue
                gen = dataset.genuine(v)
                picks.append(gen[int(rng.integers(len(gen)))])
            test_forg[u] = tuple(picks)
    return TrialSplit(protocol, train, test_gen, test_forg, int(trial_seed), dataset.users)
