"""Labeled CAN datasets: CSV loaders, seeded splits, synthetic traffic."""
import csv
import os
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import canio

CICIOV2024_CLASSES = ("Benign", "DoS", "Gas Spoofing", "RPM Spoofing", "Speed Spoofing",
                      "Steering Wheel Spoofing")
CARHACKING_CLASSES = ("Normal", "DoS", "Fuzzy", "Gear Spoofing", "RPM Spoofing")
SCHEMAS = ("ciciov2024", "carhacking", "synthetic")

# label spellings seen in the public CICIoV2024 releases
_CICIOV_ALIASES = {
    "benign": 0, "normal": 0,
    "dos": 1,
    "gas": 2, "gas spoofing": 2, "spoofing-gas": 2,
    "rpm": 3, "rpm spoofing": 3, "spoofing-rpm": 3,
    "speed": 4, "speed spoofing": 4, "spoofing-speed": 4,
    "steering_wheel": 5, "steering wheel": 5, "steering wheel spoofing": 5,
    "spoofing-steering_wheel": 5,
}

_CARHACKING_FILE_HINTS = (("dos", 1), ("fuzz", 2), ("gear", 3), ("rpm", 4))


class DatasetError(ValueError):
    pass


class SchemaMismatch(DatasetError):
    pass


class UnknownLabel(DatasetError):
    pass


class EmptyFile(DatasetError):
    pass


class TooFewSamples(DatasetError):
    pass


class LabeledSample(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class Dataset:
    """Normalized feature matrix ``X`` (n x 9) with integer labels ``y``."""

    X: np.ndarray
    y: np.ndarray
    class_names: tuple

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DatasetError(f"X shape {X.shape} does not match {y.shape[0]} labels")
        names = tuple(self.class_names)
        if len(names) < 2:
            raise DatasetError("a dataset needs at least two classes")
        if len(set(names)) != len(names):
            raise DatasetError(f"duplicate class names in {names}")
        if y.size and (y.min() < 0 or y.max() >= len(names)):
            raise UnknownLabel(f"labels must lie in [0, {len(names)})")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_names", names)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def __len__(self):
        return self.X.shape[0]

    def __iter__(self) -> Iterator[LabeledSample]:
        for x, label in zip(self.X, self.y):
            yield LabeledSample(x, int(label))

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.num_classes)

    def take(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.class_names)


# --------------------------------------------------------------------------
# loaders
# --------------------------------------------------------------------------

def _ciciov_label(text: str) -> int:
    key = text.strip().lower()
    if key in _CICIOV_ALIASES:
        return _CICIOV_ALIASES[key]
    for i, name in enumerate(CICIOV2024_CLASSES):
        if key == name.lower():
            return i
    raise UnknownLabel(f"unknown CICIoV2024 label {text!r}")


def _load_ciciov2024(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        cols = [h.strip() for h in header]
        want = ["ID"] + [f"DATA_{i}" for i in range(8)]
        if any(c not in cols for c in want):
            raise SchemaMismatch(f"{path}: header must contain {','.join(want)}")
        # the public release carries label=ATTACK/BENIGN plus a specific_class column
        label_col = "specific_class" if "specific_class" in cols else "label"
        if label_col not in cols:
            raise SchemaMismatch(f"{path}: no label column")
        idx = [cols.index(c) for c in want]
        li = cols.index(label_col)
        raw, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                raw.append([int(row[i]) for i in idx])
            except (ValueError, IndexError) as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc}") from None
            labels.append(_ciciov_label(row[li]))
    if not raw:
        raise EmptyFile(f"{path} has no data rows")
    return np.array(raw, dtype=np.int64), np.array(labels), CICIOV2024_CLASSES


def carhacking_attack_for(path) -> int:
    """Attack class implied by a Car-Hacking file name (``DoS_dataset.csv`` -> 1)."""
    name = os.path.basename(str(path)).lower()
    for hint, label in _CARHACKING_FILE_HINTS:
        if hint in name:
            return label
    raise UnknownLabel(f"cannot infer the attack type from file name {name!r}")


def _load_carhacking(path, attack=None):
    attack = carhacking_attack_for(path) if attack is None else int(attack)
    if not 0 <= attack < len(CARHACKING_CLASSES):
        raise UnknownLabel(f"attack class {attack} out of range")
    raw, labels = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                dlc = int(row[2])
                if not 0 <= dlc <= 8 or len(row) < 4 + dlc:
                    raise ValueError(f"bad dlc {dlc} for {len(row)} columns")
                can_id = int(row[1], 16)
                data = [int(b, 16) for b in row[3:3 + dlc]]
                flag = row[3 + dlc].strip()
            except (ValueError, IndexError) as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc}") from None
            if can_id > canio.MAX_BASE_ID:
                raise SchemaMismatch(f"{path}:{lineno}: extended id {can_id:#x}")
            if flag not in ("R", "T"):
                raise UnknownLabel(f"{path}:{lineno}: flag {flag!r} is neither R nor T")
            raw.append([can_id] + data + [0] * (8 - dlc))
            labels.append(attack if flag == "T" else 0)
    if not raw:
        raise EmptyFile(f"{path} has no data rows")
    return np.array(raw, dtype=np.int64), np.array(labels), CARHACKING_CLASSES


def _load_synthetic_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        want = ["ID"] + [f"DATA_{i}" for i in range(8)] + ["label", "class_name"]
        if [h.strip() for h in header] != want:
            raise SchemaMismatch(f"{path}: header must be {','.join(want)}")
        raw, labels, names = [], [], {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                raw.append([int(v) for v in row[:9]])
                label = int(row[9])
            except (ValueError, IndexError) as exc:
                raise SchemaMismatch(f"{path}:{lineno}: {exc}") from None
            if names.setdefault(label, row[10]) != row[10]:
                raise SchemaMismatch(f"{path}:{lineno}: label {label} names two classes")
            labels.append(label)
    if not raw:
        raise EmptyFile(f"{path} has no data rows")
    if sorted(names) != list(range(len(names))):
        raise UnknownLabel(f"{path}: labels {sorted(names)} are not contiguous from 0")
    return np.array(raw, dtype=np.int64), np.array(labels), tuple(names[i] for i in range(len(names)))


def load_csv(path, schema: str, attack=None) -> Dataset:
    """Load one CSV file in the given schema.

    ``attack`` overrides the Car-Hacking attack class otherwise inferred from
    the file name. Class imbalance is kept as-is.
    """
    if schema == "ciciov2024":
        raw, y, names = _load_ciciov2024(path)
    elif schema == "carhacking":
        raw, y, names = _load_carhacking(path, attack)
    elif schema == "synthetic":
        raw, y, names = _load_synthetic_csv(path)
    else:
        raise SchemaMismatch(f"unknown schema {schema!r}; expected one of {SCHEMAS}")
    try:
        X = canio.normalize_rows(raw)
    except canio.ValueOutOfRange as exc:
        raise SchemaMismatch(f"{path}: {exc}") from None
    return Dataset(X, y, names)


def concat(parts: Sequence[Dataset]) -> Dataset:
    names = parts[0].class_names
    if any(p.class_names != names for p in parts):
        raise DatasetError("cannot concatenate datasets with different classes")
    return Dataset(np.concatenate([p.X for p in parts]), np.concatenate([p.y for p in parts]), names)


def write_synthetic_csv(ds: Dataset, path):
    raw = np.rint(ds.X * np.array([canio.ID_DENOMINATOR] + [canio.BYTE_DENOMINATOR] * 8)).astype(np.int64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ID"] + [f"DATA_{i}" for i in range(8)] + ["label", "class_name"])
        for r, label in zip(raw.tolist(), ds.y.tolist()):
            w.writerow(r + [label, ds.class_names[label]])


# --------------------------------------------------------------------------
# splits
# --------------------------------------------------------------------------

def split(ds: Dataset, train_fraction: float, seed: int):
    if len(ds) == 0:
        raise TooFewSamples("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(len(ds))
    cut = int(np.floor(len(ds) * train_fraction))
    return ds.take(perm[:cut]), ds.take(perm[cut:])


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    if k < 2 or n < k:
        raise TooFewSamples(f"{n} samples cannot form {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def kfold(ds: Dataset, k: int, seed: int):
    folds = kfold_indices(len(ds), k, seed)
    pairs = []
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        pairs.append((ds.take(train_idx), ds.take(test_idx)))
    return pairs


def subsample_per_class(ds: Dataset, fraction: float, seed: int) -> Dataset:
    if len(ds) == 0:
        raise TooFewSamples("cannot subsample an empty dataset")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(ds.num_classes):
        members = np.flatnonzero(ds.y == c)
        if members.size == 0:
            continue
        m = max(1, int(np.floor(members.size * fraction)))
        keep.append(rng.choice(members, size=m, replace=False))
    idx = rng.permutation(np.concatenate(keep))
    return ds.take(idx)


# --------------------------------------------------------------------------
# synthetic traffic
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassRule:
    """How to draw frames for one class.

    ``ids`` is a tuple of arbitration ids, or None for uniform random ids.
    ``payload`` is 8 bytes, or None for uniform random bytes; ``noise`` adds
    a uniform integer in [-noise, noise] to each pattern byte (clipped).
    """

    name: str
    ids: tuple | None
    payload: bytes | None
    n: int
    noise: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"class {self.name!r} needs at least one sample")
        if self.payload is not None and len(self.payload) != 8:
            raise ValueError(f"class {self.name!r}: payload pattern must be 8 bytes")
        if self.ids is not None and (not self.ids or any(not 0 <= i <= canio.MAX_BASE_ID for i in self.ids)):
            raise ValueError(f"class {self.name!r}: ids must be 11-bit")


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValueError("a synthetic spec needs at least two classes")


_SPEC_RE = re.compile(
    r"^class\s+(?P<name>\S+)\s+id=(?P<id>\S+)\s+payload=(?P<payload>\S+)\s+n=(?P<n>\d+)\s*$"
)
_NOISY_RE = re.compile(r"^(?P<hex>[0-9A-Fa-f]{16})(?:±|\+-)(?P<k>\d+)$")


def parse_synthetic_spec(text: str) -> SyntheticSpec:
    """Parse ``class <name> id=<hex[,hex...]|random> payload=<16hex|random|16hex±k> n=<count>`` lines.

    Blank lines and ``#`` comments are ignored; ``+-`` may stand in for ``±``.
    Underscores in names become spaces.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SPEC_RE.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
        ids = None if m["id"] == "random" else tuple(int(h, 16) for h in m["id"].split(","))
        payload, noise = m["payload"], 0
        if payload == "random":
            pattern = None
        else:
            nm = _NOISY_RE.match(payload)
            if nm is not None:
                pattern, noise = bytes.fromhex(nm["hex"]), int(nm["k"])
            elif re.fullmatch(r"[0-9A-Fa-f]{16}", payload):
                pattern = bytes.fromhex(payload)
            else:
                raise ValueError(f"line {lineno}: bad payload {payload!r}")
        rules.append(ClassRule(m["name"].replace("_", " "), ids, pattern, int(m["n"]), noise))
    return SyntheticSpec(tuple(rules))


def default_synthetic_spec(n_per_class: int = 1000) -> SyntheticSpec:
    """Five classes shaped like the Car-Hacking attacks, each with its own id/payload signature."""
    return SyntheticSpec((
        ClassRule("Normal", (0x153, 0x18F, 0x260, 0x2A0, 0x329), bytes.fromhex("2040A00F1E003C50"), n_per_class, 6),
        ClassRule("DoS", (0x000,), bytes(8), n_per_class),
        ClassRule("Fuzzy", None, None, n_per_class),
        ClassRule("Gear Spoofing", (0x43F,), bytes.fromhex("0145607FFF002F00"), n_per_class, 2),
        ClassRule("RPM Spoofing", (0x316,), bytes.fromhex("05210868092121FF"), n_per_class, 2),
    ))


def generate_frames(rule: ClassRule, rng: np.random.Generator) -> list:
    if rule.ids is None:
        ids = rng.integers(0, canio.MAX_BASE_ID + 1, size=rule.n)
    else:
        ids = np.asarray(rule.ids)[rng.integers(0, len(rule.ids), size=rule.n)]
    if rule.payload is None:
        payloads = rng.integers(0, 256, size=(rule.n, 8))
    else:
        base = np.frombuffer(rule.payload, dtype=np.uint8).astype(np.int64)
        payloads = np.broadcast_to(base, (rule.n, 8)).copy()
        if rule.noise:
            payloads = np.clip(payloads + rng.integers(-rule.noise, rule.noise + 1, size=payloads.shape), 0, 255)
    return [canio.RawCanFrame(int(i), bytes(p.astype(np.uint8).tolist())) for i, p in zip(ids, payloads)]


def gen_synthetic(spec: SyntheticSpec, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for label, rule in enumerate(spec.classes):
        for frame in generate_frames(rule, rng):
            rows.append(canio.normalize(canio.extract_features(frame)))
            labels.append(label)
    return Dataset(np.array(rows), np.array(labels), tuple(r.name for r in spec.classes))
