"""Feature-table handling: CSV I/O, standardization, PCA, stratified split and SMOTE.

Labels are binary with 1 = codeleted (the positive class).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

CONSTANT_TOL = 1e-12


class TableError(ValueError):
    pass


class EmptyTable(TableError):
    pass


class RankTooLow(TableError):
    pass


class ClassTooSmall(TableError):
    pass


class MinorityTooSmall(TableError):
    pass


@dataclass(frozen=True, eq=False)
class FeatureTable:
    case_ids: tuple[str, ...]
    names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "case_ids", tuple(str(c) for c in self.case_ids))
        object.__setattr__(self, "names", tuple(self.names))
        if X.ndim != 2 or X.shape != (len(self.case_ids), len(self.names)):
            raise TableError(f"matrix shape {X.shape} does not match "
                             f"{len(self.case_ids)} cases x {len(self.names)} features")
        if len(y) != len(self.case_ids):
            raise TableError(f"{len(y)} labels for {len(self.case_ids)} cases")
        if len(set(self.names)) != len(self.names):
            raise TableError("feature names are not unique")
        if not np.all(np.isfinite(X)):
            raise TableError("feature matrix contains NaN or infinite values")
        if y.size and not np.isin(y, (0, 1)).all():
            raise TableError("labels must be 0 or 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return len(self.case_ids)

    def subset(self, rows) -> "FeatureTable":
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureTable(tuple(self.case_ids[r] for r in rows), self.names, self.X[rows], self.y[rows])

    def with_matrix(self, X: np.ndarray, names) -> "FeatureTable":
        return FeatureTable(self.case_ids, tuple(names), X, self.y)

    def select(self, names) -> "FeatureTable":
        """Reorder / pick columns by name."""
        index = {n: c for c, n in enumerate(self.names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise TableError(f"missing feature columns: {missing[:5]}")
        cols = [index[n] for n in names]
        return FeatureTable(self.case_ids, tuple(names), self.X[:, cols], self.y)

    def class_counts(self) -> dict[int, int]:
        return {c: int(np.sum(self.y == c)) for c in (0, 1)}


def write_table_csv(table: FeatureTable, path) -> None:
    """Write ``case_id,<features...>,label`` with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", *table.names, "label"])
        for cid, row, label in zip(table.case_ids, table.X, table.y):
            w.writerow([cid, *(f"{v:.17g}" for v in row), int(label)])


def read_table_csv(path) -> FeatureTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyTable(f"{path}: empty file")
    header = rows[0]
    if not header or header[0] != "case_id":
        raise TableError(f"{path}: first column must be 'case_id'")
    if header[-1] != "label":
        raise TableError(f"{path}: last column must be 'label'")
    names = header[1:-1]
    body = [r for r in rows[1:] if r]
    if not body:
        raise EmptyTable(f"{path}: no data rows")
    ids, X, y = [], [], []
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise TableError(f"{path}:{lineno}: expected {len(header)} fields, got {len(r)}")
        try:
            X.append([float(v) for v in r[1:-1]])
            y.append(int(r[-1]))
        except ValueError as exc:
            raise TableError(f"{path}:{lineno}: {exc}") from exc
        ids.append(r[0])
    if len(set(ids)) != len(ids):
        raise TableError(f"{path}: duplicate case ids")
    return FeatureTable(tuple(ids), tuple(names), np.array(X, dtype=np.float64).reshape(len(ids), len(names)), np.array(y))


# ---------------------------------------------------------------- standardization

@dataclass(frozen=True, eq=False)
class ScalerModel:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "constant": self.constant.tolist()}

    @classmethod
    def from_dict(cls, d) -> "ScalerModel":
        return cls(np.array(d["mean"], dtype=np.float64), np.array(d["std"], dtype=np.float64),
                   np.array(d["constant"], dtype=bool))


def fit_scaler(X) -> ScalerModel:
    """Per-column mean and population standard deviation."""
    X = np.asarray(X.X if isinstance(X, FeatureTable) else X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTable("cannot fit a scaler on an empty table")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = std <= CONSTANT_TOL * np.maximum(1.0, np.abs(mean))
    return ScalerModel(mean, std, constant)


def apply_scaler(model: ScalerModel, X):
    """Standardize; constant columns map to 0.  Accepts arrays or FeatureTables."""
    if isinstance(X, FeatureTable):
        return X.with_matrix(apply_scaler(model, X.X), X.names)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != len(model.mean):
        raise TableError(f"expected {len(model.mean)} columns, got {X.shape[-1]}")
    safe = np.where(model.constant, 1.0, model.std)
    return np.where(model.constant, 0.0, (X - model.mean) / safe)


# -------------------------------------------------------------------------- PCA

@dataclass(frozen=True, eq=False)
class PcaModel:
    """``components`` is (k, n_features) with orthonormal rows."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {"k": self.k, "mean": self.mean.tolist(), "components": self.components.tolist(),
                "explained_variance_ratio": self.explained_variance_ratio.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PcaModel":
        return cls(np.array(d["mean"], dtype=np.float64),
                   np.array(d["components"], dtype=np.float64).reshape(int(d["k"]), -1),
                   np.array(d["explained_variance_ratio"], dtype=np.float64))


def fit_pca(X, k: int = 8) -> PcaModel:
    """Top-*k* principal directions of the column-centred data.

    Explained-variance ratios are relative to the total variance.  Each
    component is signed so its largest-magnitude entry is positive.
    """
    X = np.asarray(X.X if isinstance(X, FeatureTable) else X, dtype=np.float64)
    n, p = X.shape
    if n < 2:
        raise RankTooLow("PCA needs at least two rows")
    if not 1 <= k <= min(n - 1, p):
        raise RankTooLow(f"k={k} exceeds min(rows-1, cols) = {min(n - 1, p)}")
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    var = s ** 2
    total = var.sum()
    ratios = var / total if total > 0 else np.zeros_like(var)
    comps = vt[:k].copy()
    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(k), pivot])
    signs[signs == 0] = 1.0
    comps *= signs[:, None]
    rank = int(np.sum(var > var.max() * max(n, p) * np.finfo(float).eps)) if total > 0 else 0
    if k > rank:
        logger.warning("PCA: k=%d exceeds the numerical rank %d; trailing ratios are ~0", k, rank)
    return PcaModel(mean, comps, ratios[:k].copy())


def apply_pca(model: PcaModel, X):
    if isinstance(X, FeatureTable):
        names = [f"PC{i + 1}" for i in range(model.k)]
        return X.with_matrix(apply_pca(model, X.X), names)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != len(model.mean):
        raise TableError(f"expected {len(model.mean)} columns, got {X.shape[-1]}")
    return (X - model.mean) @ model.components.T


def inverse_pca(model: PcaModel, Z) -> np.ndarray:
    return np.asarray(Z) @ model.components + model.mean


# ----------------------------------------------------------------------- split

def stratified_split(table: FeatureTable, test_fraction: float = 0.25, seed: int = 0):
    """Split into (train, test), preserving class proportions.

    The test size is ceil(test_fraction * n); it is shared among classes by
    largest remainder, ties going to the lower class label.  Rows are drawn
    per class from a seeded permutation; each partition keeps the input
    row order.
    """
    n = len(table)
    if not 0 <= test_fraction < 1:
        raise ClassTooSmall(f"test_fraction must be in [0, 1), got {test_fraction}")
    n_test = math.ceil(test_fraction * n - 1e-12)
    classes = sorted(set(int(v) for v in table.y))
    sizes = {c: int(np.sum(table.y == c)) for c in classes}
    exact = {c: sizes[c] * n_test / n for c in classes}
    alloc = {c: math.floor(exact[c]) for c in classes}
    leftover = n_test - sum(alloc.values())
    for c in sorted(classes, key=lambda c: (-(exact[c] - alloc[c]), c))[:leftover]:
        alloc[c] += 1
    for c in (0, 1):
        n_c = sizes.get(c, 0)
        if alloc.get(c, 0) < 1 or n_c - alloc.get(c, 0) < 1:
            raise ClassTooSmall(f"class {c} ({n_c} cases) cannot appear in both partitions "
                                f"at test_fraction={test_fraction}")

    rng = np.random.default_rng(seed)
    test_mask = np.zeros(n, dtype=bool)
    for c in classes:
        rows = np.flatnonzero(table.y == c)
        test_mask[rows[rng.permutation(len(rows))[:alloc[c]]]] = True
    return table.subset(np.flatnonzero(~test_mask)), table.subset(np.flatnonzero(test_mask))


# ----------------------------------------------------------------------- SMOTE

@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")


@dataclass(frozen=True, eq=False)
class SmoteResult:
    """Balanced table plus provenance of every synthetic row.

    ``parents`` and ``neighbors`` index rows of the input table; ``gaps`` are
    the interpolation coefficients u in s = x + u * (nbr - x).
    """

    table: FeatureTable
    minority_class: int
    n_synthetic: int
    parents: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    neighbors: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    gaps: np.ndarray = field(default_factory=lambda: np.zeros(0))


def minority_neighbors(Xm: np.ndarray, k: int) -> np.ndarray:
    """Indices (m, k) of each row's k nearest other rows; ties keep row order."""
    d2 = np.sum((Xm[:, None, :] - Xm[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def smote(table: FeatureTable, cfg: SmoteConfig = SmoteConfig()) -> SmoteResult:
    """Append synthetic minority rows until both classes have equal counts.

    Parents cycle through a seeded permutation of the minority rows so each
    one is used as evenly as possible; the neighbour is drawn uniformly from
    the parent's k nearest minority rows and the gap u from U[0, 1).
    """
    counts = table.class_counts()
    if min(counts.values()) == 0:
        raise MinorityTooSmall("SMOTE needs both classes present")
    minority = 0 if counts[0] < counts[1] else 1
    n_new = abs(counts[1] - counts[0])
    if n_new == 0:
        return SmoteResult(table, minority, 0)
    m = counts[minority]
    if m <= cfg.k_neighbors:
        raise MinorityTooSmall(f"minority class has {m} rows, needs more than k={cfg.k_neighbors}")

    rows = np.flatnonzero(table.y == minority)
    Xm = table.X[rows]
    nbrs = minority_neighbors(Xm, cfg.k_neighbors)

    rng = np.random.default_rng(cfg.seed)
    order = np.concatenate([rng.permutation(m) for _ in range(-(-n_new // m))])[:n_new]
    pick = rng.integers(0, cfg.k_neighbors, size=n_new)
    gaps = rng.random(n_new)
    parent_local = order
    nbr_local = nbrs[parent_local, pick]
    x = Xm[parent_local]
    synth = x + gaps[:, None] * (Xm[nbr_local] - x)

    width = len(str(n_new))
    ids = tuple(f"smote_{i + 1:0{width}d}" for i in range(n_new))
    balanced = FeatureTable(
        table.case_ids + ids,
        table.names,
        np.vstack([table.X, synth]),
        np.concatenate([table.y, np.full(n_new, minority)]),
    )
    logger.info("SMOTE: %d synthetic rows for class %d", n_new, minority)
    return SmoteResult(balanced, minority, n_new, rows[parent_local], rows[nbr_local], gaps)
