"""Loading, encoding, group partitioning and splitting of tabular data.

A :class:`Schema` describes a raw comma-separated file: its columns, which
one is the class, which one is the sensitive attribute and which of their
values stand for the positive class and the protected group.  ``load_table``
turns such a file into an :class:`EncodedDataset` (one-hot categoricals, raw
numerics); ``split`` produces train/test halves and standardizes numerics
with statistics from the training rows only.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from fae.errors import DataError, EmptyGroupError, SchemaError

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    values: tuple[str, ...] | None = None  # declared domain, categorical only


@dataclass(frozen=True)
class Schema:
    columns: tuple[Column, ...]
    label: str
    positive_label: str
    sensitive: str
    protected_value: str
    drop: tuple[str, ...] = ()
    missing_values: tuple[str, ...] = ("?",)
    # restrict missing-value detection to these columns; None means all
    missing_columns: tuple[str, ...] | None = None
    label_map: dict[str, str] = field(default_factory=dict)
    sep: str = ","
    header: bool = False
    comment: str | None = None
    name: str = "dataset"
    download: str | None = None

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        for c in self.columns:
            if c.kind not in (CATEGORICAL, NUMERIC):
                raise SchemaError(f"column {c.name!r}: unknown kind {c.kind!r}")
        if names.count(self.sensitive) != 1:
            raise SchemaError(f"sensitive attribute {self.sensitive!r} must appear exactly once")
        if self.label not in names:
            raise SchemaError(f"class attribute {self.label!r} not among columns")
        if self.sensitive == self.label:
            raise SchemaError("sensitive attribute and class attribute must differ")
        if self.sensitive in self.drop:
            raise SchemaError("the sensitive attribute cannot be dropped")
        sa = self.column(self.sensitive)
        if sa.kind != CATEGORICAL:
            raise SchemaError("sensitive attribute must be categorical")
        if sa.values is not None and self.protected_value not in sa.values:
            raise SchemaError(
                f"protected value {self.protected_value!r} not in domain of {self.sensitive!r}"
            )
        lab = self.column(self.label)
        if lab.values is not None:
            mapped = {self.label_map.get(v, v) for v in lab.values}
            if self.positive_label not in mapped:
                raise SchemaError(
                    f"positive label {self.positive_label!r} not in domain of {self.label!r}"
                )
            if len(mapped) != 2:
                raise SchemaError(f"class attribute {self.label!r} is not binary after mapping")

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def feature_columns(self, include_sa: bool = True) -> list[Column]:
        out = []
        for c in self.columns:
            if c.name == self.label or c.name in self.drop:
                continue
            if c.name == self.sensitive and not include_sa:
                continue
            out.append(c)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        d = dict(d)
        try:
            cols = tuple(
                Column(
                    name=str(c["name"]),
                    kind=str(c.get("kind", CATEGORICAL)),
                    values=tuple(str(v) for v in c["values"]) if c.get("values") else None,
                )
                for c in d.pop("columns")
            )
            kw = dict(
                columns=cols,
                label=str(d.pop("label")),
                positive_label=str(d.pop("positive_label")),
                sensitive=str(d.pop("sensitive")),
                protected_value=str(d.pop("protected_value")),
            )
        except KeyError as exc:
            raise SchemaError(f"schema is missing required field {exc.args[0]!r}") from None
        for key in ("drop", "missing_values"):
            if key in d:
                kw[key] = tuple(str(v) for v in d.pop(key) or ())
        if d.get("missing_columns") is not None:
            kw["missing_columns"] = tuple(str(v) for v in d.pop("missing_columns"))
        else:
            d.pop("missing_columns", None)
        if "label_map" in d:
            kw["label_map"] = {str(k): str(v) for k, v in (d.pop("label_map") or {}).items()}
        for key in ("sep", "comment", "name", "download"):
            if key in d:
                kw[key] = d.pop(key)
        if "header" in d:
            kw["header"] = bool(d.pop("header"))
        if d:
            raise SchemaError(f"unknown schema fields: {sorted(d)}")
        return cls(**kw)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "columns": [
                {"name": c.name, "kind": c.kind, **({"values": list(c.values)} if c.values else {})}
                for c in self.columns
            ],
            "label": self.label,
            "positive_label": self.positive_label,
            "sensitive": self.sensitive,
            "protected_value": self.protected_value,
            "drop": list(self.drop),
            "missing_values": list(self.missing_values),
            "missing_columns": list(self.missing_columns) if self.missing_columns is not None else None,
            "label_map": dict(self.label_map),
            "sep": self.sep,
            "header": self.header,
            "comment": self.comment,
        }
        if self.download:
            d["download"] = self.download
        return d

    @classmethod
    def from_file(cls, path) -> "Schema":
        path = Path(path)
        try:
            with open(path) as fh:
                doc = yaml.safe_load(fh)
        except OSError as exc:
            raise DataError(f"cannot read schema {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise SchemaError(f"cannot parse schema {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise SchemaError(f"schema {path} is not a key/value document")
        return cls.from_dict(doc)


def builtin_schema(name: str) -> Path:
    """Path of a schema shipped with the package (``adult`` or ``bank``)."""
    return Path(__file__).parent / "resources" / f"{name}.yaml"


def resolve_schema(spec) -> Schema:
    if isinstance(spec, Schema):
        return spec
    p = Path(spec)
    if not p.exists() and builtin_schema(str(spec)).exists():
        p = builtin_schema(str(spec))
    return Schema.from_file(p)


def resolve_data_path(path) -> Path:
    """Resolve a dataset path, honouring the ``FAE_DATA_DIR`` override for relative paths."""
    p = Path(path)
    if p.is_absolute() or p.exists():
        return p
    root = os.environ.get("FAE_DATA_DIR")
    if root:
        return Path(root) / p
    return p


@dataclass
class Encoder:
    """Column-wise encoder: one-hot for categoricals, (optionally standardized) numerics."""

    columns: list[Column]
    categories: dict[str, list[str]]
    mean: np.ndarray | None = None
    inv_scale: np.ndarray | None = None

    @property
    def numeric(self) -> list[str]:
        return [c.name for c in self.columns if c.kind == NUMERIC]

    @property
    def feature_names(self) -> list[str]:
        names = []
        for c in self.columns:
            if c.kind == CATEGORICAL:
                names.extend(f"{c.name}={v}" for v in self.categories[c.name])
            else:
                names.append(c.name)
        return names

    @property
    def numeric_index(self) -> np.ndarray:
        idx, pos = [], 0
        for c in self.columns:
            if c.kind == CATEGORICAL:
                pos += len(self.categories[c.name])
            else:
                idx.append(pos)
                pos += 1
        return np.asarray(idx, dtype=int)

    @property
    def standardized(self) -> bool:
        return self.mean is not None

    def transform(self, frame: pd.DataFrame) -> np.ndarray:
        blocks = []
        for c in self.columns:
            col = frame[c.name]
            if c.kind == CATEGORICAL:
                cats = self.categories[c.name]
                codes = pd.Categorical(col.astype(str), categories=cats).codes
                block = np.zeros((len(frame), len(cats)))
                hit = codes >= 0  # unseen categories leave the block all-zero
                block[np.nonzero(hit)[0], codes[hit]] = 1.0
                blocks.append(block)
            else:
                blocks.append(col.to_numpy(dtype=float).reshape(-1, 1))
        X = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
        if self.standardized:
            X = self.scale(X)
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite feature values after encoding")
        return X

    def scale(self, X: np.ndarray) -> np.ndarray:
        X = X.copy()
        j = self.numeric_index
        X[:, j] = (X[:, j] - self.mean) * self.inv_scale
        return X

    def fitted_scaler(self, X_raw: np.ndarray) -> "Encoder":
        j = self.numeric_index
        cols = X_raw[:, j]
        mean = cols.mean(axis=0) if len(cols) else np.zeros(len(j))
        std = cols.std(axis=0) if len(cols) else np.ones(len(j))
        inv = np.zeros_like(std)
        nonconst = std > 0
        inv[nonconst] = 1.0 / std[nonconst]
        return replace(self, mean=mean, inv_scale=inv)

    def to_dict(self) -> dict:
        return {
            "columns": [{"name": c.name, "kind": c.kind} for c in self.columns],
            "categories": self.categories,
            "mean": None if self.mean is None else [float(v) for v in self.mean],
            "inv_scale": None if self.inv_scale is None else [float(v) for v in self.inv_scale],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Encoder":
        return cls(
            columns=[Column(c["name"], c["kind"]) for c in d["columns"]],
            categories={k: list(v) for k, v in d["categories"].items()},
            mean=None if d["mean"] is None else np.asarray(d["mean"], dtype=float),
            inv_scale=None if d["inv_scale"] is None else np.asarray(d["inv_scale"], dtype=float),
        )


@dataclass
class EncodedDataset:
    X: np.ndarray  # n x m
    y: np.ndarray  # +1 / -1
    protected: np.ndarray  # True where SA == s
    encoder: Encoder

    def __post_init__(self):
        n = self.X.shape[0]
        if self.y.shape != (n,) or self.protected.shape != (n,):
            raise DataError("feature matrix, labels and group flags disagree in length")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return self.encoder.feature_names

    def subset(self, idx) -> "EncodedDataset":
        idx = np.asarray(idx)
        return EncodedDataset(self.X[idx], self.y[idx], self.protected[idx], self.encoder)


def read_frame(paths, schema: Schema, require_label: bool = True) -> pd.DataFrame:
    """Read raw rows, drop rows with missing values, then exact duplicates.

    Both filters operate on raw string values so their result does not
    depend on the encoding.  Row order is the input order after filtering.
    """
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    frames = []
    names = [c.name for c in schema.columns]
    for p in paths:
        p = resolve_data_path(p)
        if not p.exists():
            msg = f"dataset file not found: {p}"
            if schema.download:
                msg += f"\n{schema.download}"
            raise DataError(msg)
        try:
            df = pd.read_csv(
                p,
                sep=schema.sep,
                header=0 if schema.header else None,
                dtype=str,
                keep_default_na=False,
                skipinitialspace=True,
                comment=schema.comment,
                skip_blank_lines=True,
            )
        except (pd.errors.ParserError, UnicodeDecodeError) as exc:
            raise DataError(f"cannot parse {p}: {exc}") from None
        if schema.header:
            df.columns = [str(c).strip().strip('"') for c in df.columns]
            missing = [c for c in names if c not in df.columns]
            if missing and not (not require_label and missing == [schema.label]):
                raise DataError(f"{p}: missing columns {missing}")
            df = df[[c for c in names if c in df.columns]]
        else:
            if df.shape[1] == len(names):
                df.columns = names
            elif not require_label and df.shape[1] == len(names) - 1:
                df.columns = [c for c in names if c != schema.label]
            else:
                raise DataError(f"{p}: expected {len(names)} columns, found {df.shape[1]}")
        frames.append(df)
    df = pd.concat(frames, ignore_index=True)
    df = df.apply(lambda s: s.str.strip().str.strip('"'))
    check = list(schema.missing_columns) if schema.missing_columns is not None else list(df.columns)
    check = [c for c in check if c in df.columns]
    tokens = set(schema.missing_values) | {""}
    missing = df[check].isin(tokens).any(axis=1)
    df = df[~missing.to_numpy()]
    # label spellings are normalized first so duplicates across files are detected
    if schema.label in df.columns and schema.label_map:
        df[schema.label] = df[schema.label].replace(schema.label_map)
    df = df.drop_duplicates(keep="first").reset_index(drop=True)
    for c in schema.columns:
        if c.kind == NUMERIC and c.name in df.columns:
            try:
                df[c.name] = pd.to_numeric(df[c.name])
            except ValueError as exc:
                raise DataError(f"column {c.name!r}: {exc}") from None
    return df


def _labels_and_flags(df: pd.DataFrame, schema: Schema):
    labels = df[schema.label].astype(str)
    seen = sorted(labels.unique())
    if len(seen) > 2 or (len(seen) == 2 and schema.positive_label not in seen):
        raise SchemaError(f"class attribute {schema.label!r} is not binary after mapping: {seen}")
    y = np.where(labels.to_numpy() == schema.positive_label, 1, -1).astype(np.int64)
    protected = df[schema.sensitive].astype(str).to_numpy() == schema.protected_value
    return y, protected


def build_encoder(df: pd.DataFrame, schema: Schema, include_sa: bool = True) -> Encoder:
    cols = schema.feature_columns(include_sa)
    cats = {}
    for c in cols:
        if c.kind != CATEGORICAL:
            continue
        observed = set(df[c.name].astype(str))
        if c.values is not None:
            unknown = sorted(observed - set(c.values))
            if unknown:
                raise DataError(f"column {c.name!r}: unknown categorical value {unknown[0]!r}")
            cats[c.name] = list(c.values)
        else:
            cats[c.name] = sorted(observed)
    return Encoder(columns=cols, categories=cats)


def load_table(path, schema: Schema, include_sa: bool = True) -> EncodedDataset:
    """Read ``path`` (one file or a list of files) and encode it under ``schema``.

    Numeric columns are left unscaled; ``split`` or ``standardize`` fit the
    scaler on training rows.
    """
    df = read_frame(path, schema)
    for name in (schema.label, schema.sensitive):
        col = schema.column(name)
        if col.values is not None:
            allowed = {schema.label_map.get(v, v) for v in col.values} | set(col.values)
            bad = sorted(set(df[name].astype(str)) - allowed)
            if bad:
                raise DataError(f"column {name!r}: unknown categorical value {bad[0]!r}")
    y, protected = _labels_and_flags(df, schema)
    enc = build_encoder(df, schema, include_sa)
    X = enc.transform(df)
    return EncodedDataset(X, y, protected, enc)


def encode_frame(df: pd.DataFrame, schema: Schema, encoder: Encoder):
    """Encode raw rows with an already fitted encoder (prediction time).

    Returns ``(X, protected, y)``; ``y`` is None when the class column is absent.
    """
    X = encoder.transform(df)
    protected = df[schema.sensitive].astype(str).to_numpy() == schema.protected_value
    y = None
    if schema.label in df.columns:
        y, _ = _labels_and_flags(df, schema)
    return X, protected, y


def standardize(ds: EncodedDataset, reference: EncodedDataset | None = None) -> EncodedDataset:
    """Standardize numeric columns with statistics of ``reference`` (default: ``ds`` itself)."""
    if ds.encoder.standardized:
        raise DataError("dataset is already standardized")
    ref = reference if reference is not None else ds
    enc = ds.encoder.fitted_scaler(ref.X)
    return EncodedDataset(enc.scale(ds.X), ds.y, ds.protected, enc)


@dataclass(frozen=True)
class GroupPartition:
    s_pos: np.ndarray
    s_neg: np.ndarray
    ns_pos: np.ndarray
    ns_neg: np.ndarray

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        return len(self.s_pos), len(self.s_neg), len(self.ns_pos), len(self.ns_neg)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"s_pos": self.s_pos, "s_neg": self.s_neg, "ns_pos": self.ns_pos, "ns_neg": self.ns_neg}


_GROUP_LABELS = {"s_pos": "s+", "s_neg": "s-", "ns_pos": "s̄+", "ns_neg": "s̄-"}


def partition_groups(ds: EncodedDataset, require_nonempty: bool = True) -> GroupPartition:
    if ds.n == 0:
        raise DataError("cannot partition an empty dataset")
    pos = ds.y == 1
    prot = ds.protected
    part = GroupPartition(
        s_pos=np.flatnonzero(prot & pos),
        s_neg=np.flatnonzero(prot & ~pos),
        ns_pos=np.flatnonzero(~prot & pos),
        ns_neg=np.flatnonzero(~prot & ~pos),
    )
    if require_nonempty:
        for key, idx in part.as_dict().items():
            if len(idx) == 0:
                raise EmptyGroupError(f"empty group {_GROUP_LABELS[key]}")
    return part


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 2 / 3
    seed: int = 0
    index: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train fraction must lie strictly between 0 and 1")


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    n_train = math.ceil(round(spec.train_fraction * n, 9))
    rng = np.random.default_rng([spec.seed, spec.index])
    perm = rng.permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(ds: EncodedDataset, spec: SplitSpec) -> tuple[EncodedDataset, EncodedDataset]:
    """Random train/test split; numerics standardized with train statistics."""
    tr, te = split_indices(ds.n, spec)
    train, test = ds.subset(tr), ds.subset(te)
    if ds.encoder.standardized:
        return train, test
    return standardize(train), standardize(test, reference=train)

