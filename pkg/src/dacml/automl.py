"""Budgeted hyperparameter search over all (variant x family) cells.

Candidate grids default to the tuned values reported for each family plus a
numeric neighbor on each side, so the known-good configurations are always
reachable at desk-scale budgets.  The budget splits evenly across families
(remainder to earlier-listed ones) and every candidate gets a seed derived
from (search seed, candidate index), which makes the leaderboard identical
whether candidates run serially or on any number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .errors import DataError
from .features import VARIANT_LABELS, VARIANTS, FeatureMatrix
from .models import (
    FAMILIES,
    FAMILY_LABELS,
    TABLE_FAMILY_ORDER,
    ModelSpec,
    TrainedModel,
    predict,
    train,
)
from .util import atomic_write_text, derive_seed, format_number, open_text

log = logging.getLogger("dacml.automl")

DEFAULT_BUDGET = 30

# Candidate lists: the per-family tuned values observed across the five data
# variants, extended by one numeric neighbor on each side where one exists.
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "GBM": {
        "col_sample_rate": [0.3, 0.4, 0.7, 0.8, 1.0],
        "col_sample_rate_per_tree": [0.6, 0.7, 0.8, 1.0],
        "learn_rate": [0.05, 0.1, 0.2],
        "max_depth": [3, 4, 6, 7, 15, 17, 18],
        "min_rows": [1.0, 5.0, 10.0, 15.0, 100.0],
        "min_split_improvement": [1e-6, 1e-5, 1e-4],
        "ntrees": [33, 35, 37, 41, 45, 50, 52],
        "sample_rate": [0.4, 0.5, 0.8, 0.9, 1.0],
    },
    "XGB": {
        "booster": ["gbtree"],
        "col_sample_rate": [0.4, 0.6, 0.8, 1.0],
        "col_sample_rate_per_tree": [0.6, 0.7, 0.8, 0.9],
        "max_depth": [4, 5, 9, 10, 11],
        "min_rows": [1.0, 3.0, 5.0, 10.0, 12.0],
        "ntrees": [32, 33, 34, 35, 40, 42, 43],
        "reg_alpha": [0.0, 0.001, 0.01, 1.0],
        "reg_lambda": [0.0, 0.01, 0.1, 1.0, 2.0],
        "sample_rate": [0.4, 0.6, 0.8, 1.0],
    },
    "DRF": {
        "balance_classes": [False],
        "ntrees": [32, 33, 34, 40, 41, 42],
        "max_depth": [10, 20, 30],
        "col_sample_rate_change_per_level": [0.9, 1.0, 1.1],
        "col_sample_rate_per_tree": [0.5, 1.0],
        "min_split_improvement": [1e-6, 1e-5, 1e-4],
    },
    "XRT": {
        "balance_classes": [False],
        "ntrees": [33, 35, 41, 43, 45, 47],
        "max_depth": [10, 20, 30],
        "col_sample_rate_change_per_level": [0.9, 1.0, 1.1],
        "col_sample_rate_per_tree": [0.5, 1.0],
        "min_split_improvement": [1e-6, 1e-5, 1e-4],
    },
    # The grid report for the linear family lists only the mixing value; the
    # strength axis below makes a searchable family out of it.
    "GLM": {
        "alpha": [0.0, 0.25, 0.5],
        "lambda": [0.0, 1e-4, 1e-3, 1e-2, 0.1],
    },
    "MLP": {
        "epsilon": [0.0, 1e-8, 1e-6, 1e-4],
        "hidden": [[100, 100], [10, 10, 10], [50, 50, 50], [50], [100]],
        "hidden_dropout_ratios": [None, 0.1, 0.2, 0.4, 0.5],
        "input_dropout_ratio": [0.0, 0.1, 0.15, 0.2, 0.25],
        "rho": [0.85, 0.9, 0.95, 0.99, 0.995],
    },
}


@dataclass(frozen=True)
class SearchSpace:
    grids: dict[str, dict[str, list]] = field(
        default_factory=lambda: {f: {p: list(v) for p, v in g.items()}
                                 for f, g in DEFAULT_GRIDS.items()})
    budget: int = DEFAULT_BUDGET

    def families(self) -> list[str]:
        return [f for f in FAMILIES if f in self.grids]

    def family_budgets(self) -> dict[str, int]:
        fams = self.families()
        if not fams:
            raise DataError("search space has no families")
        if self.budget < len(fams):
            raise DataError(f"budget {self.budget} is below the family count {len(fams)}")
        base, remainder = divmod(self.budget, len(fams))
        return {f: base + (1 if i < remainder else 0) for i, f in enumerate(fams)}

    def grid_size(self, family: str) -> int:
        size = 1
        for values in self.grids[family].values():
            size *= len(values)
        return size


def _parse_grid_value(token: str):
    token = token.strip()
    if token.startswith("[") and token.endswith("]"):
        inner = token[1:-1].strip()
        return [_parse_grid_value(t) for t in inner.split(";")] if inner else []
    low = token.lower()
    if low == "none":
        return None
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def parse_search_space(text: str, budget: int = DEFAULT_BUDGET) -> SearchSpace:
    """Grid config: `family.parameter = v1,v2,...` lines.

    List-valued candidates use brackets with `;` separators, e.g.
    `MLP.hidden = [100;100],[50]`.  A `budget = N` line overrides the budget.
    """
    grids: dict[str, dict[str, list]] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"grid line {ln}: expected 'family.parameter = values'")
        key, _, values = line.partition("=")
        key = key.strip()
        if key == "budget":
            budget = int(values.strip())
            continue
        if "." not in key:
            raise DataError(f"grid line {ln}: key must look like FAMILY.parameter")
        family, _, param = key.partition(".")
        family = family.upper()
        if family not in FAMILIES:
            raise DataError(f"grid line {ln}: unknown family {family!r}")
        candidates = [_parse_grid_value(t) for t in _split_top_level(values)]
        if not candidates:
            raise DataError(f"grid line {ln}: empty candidate list for {key}")
        grids.setdefault(family, {})[param.strip()] = candidates
    if not grids:
        raise DataError("grid config defines no candidates")
    return SearchSpace(grids=grids, budget=budget)


def _split_top_level(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p for p in (s.strip() for s in parts) if p]


def enumerate_candidates(space: SearchSpace, seed: int) -> list[ModelSpec]:
    """Deterministic without-replacement sample from each family's grid.

    Combination order is lexicographic over parameter names (sorted) with
    values in their listed order; a full-grid budget therefore enumerates
    exhaustively in that order.  Candidate i receives seed derive(seed, i).
    """
    budgets = space.family_budgets()
    specs: list[ModelSpec] = []
    for fam_index, family in enumerate(space.families()):
        grid = space.grids[family]
        for param, values in grid.items():
            if not values:
                raise DataError(f"{family}.{param} has an empty candidate list")
        size = space.grid_size(family)
        k = budgets[family]
        if k > size:
            raise DataError(
                f"{family}: budget share {k} exceeds grid size {size}; "
                "add candidates or lower the budget")
        names = sorted(grid)
        dims = [len(grid[n]) for n in names]
        if k == size:
            chosen = np.arange(size)
        else:
            rng = np.random.default_rng(derive_seed(seed, 0xA07, fam_index))
            chosen = np.sort(rng.choice(size, size=k, replace=False))
        for flat in chosen:
            combo = {}
            rem = int(flat)
            for name, dim in zip(reversed(names), reversed(dims)):
                rem, pos = divmod(rem, dim)
                combo[name] = grid[name][pos]
            spec = ModelSpec(family, dict(sorted(combo.items())), seed=0)
            specs.append(spec)
    out = []
    for index, spec in enumerate(specs):
        out.append(ModelSpec(spec.family, spec.params, seed=derive_seed(seed, index)))
        out[-1].validate()
    return out


@dataclass(frozen=True)
class LeaderboardEntry:
    index: int
    spec: ModelSpec
    f1: Optional[float]
    accuracy: Optional[float]
    train_seconds: float = 0.0
    error: Optional[str] = None


@dataclass(frozen=True)
class Leaderboard:
    variant: str
    seed: int
    entries: tuple[LeaderboardEntry, ...]  # sorted: F1 desc, accuracy desc, index

    @property
    def best(self) -> LeaderboardEntry:
        head = self.entries[0]
        if head.f1 is None:
            raise DataError("leaderboard has no successful entries")
        return head

    def best_of_family(self, family: str) -> Optional[LeaderboardEntry]:
        for entry in self.entries:
            if entry.spec.family == family and entry.f1 is not None:
                return entry
        return None


def binary_f1_accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float]:
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    tp = int((y_pred & y_true).sum())
    fp = int((y_pred & ~y_true).sum())
    fn = int((~y_pred & y_true).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = float((y_pred == y_true).mean())
    return f1, accuracy


def _fit_and_score(index: int, spec: ModelSpec, train_m: FeatureMatrix,
                   test_m: FeatureMatrix) -> LeaderboardEntry:
    try:
        model = train(spec, train_m)
        preds = predict(model, test_m)
        f1, accuracy = binary_f1_accuracy(test_m.labels, preds.label)
        return LeaderboardEntry(index, spec, f1, accuracy, model.train_seconds)
    except Exception as exc:  # failures are leaderboard data, not crashes
        return LeaderboardEntry(index, spec, None, None, 0.0, error=str(exc))


def run_search(candidates: Sequence[ModelSpec], train_m: FeatureMatrix,
               test_m: FeatureMatrix, *, variant: str = "", seed: int = 0,
               workers: int = 1) -> Leaderboard:
    """Train and score every candidate; failures become absent-score entries."""
    if test_m.labels is None or train_m.labels is None:
        raise DataError("run_search needs labeled train and test matrices")
    if workers > 1:
        results = Parallel(n_jobs=workers)(
            delayed(_fit_and_score)(i, spec, train_m, test_m)
            for i, spec in enumerate(candidates))
    else:
        results = [_fit_and_score(i, spec, train_m, test_m)
                   for i, spec in enumerate(candidates)]
    if results and all(e.error is not None for e in results):
        causes = "; ".join(f"{e.spec.family}[{e.index}]: {e.error}" for e in results)
        raise DataError(f"every candidate failed: {causes}")
    for e in results:
        if e.error is not None:
            log.warning("candidate %d (%s) failed: %s", e.index, e.spec.family, e.error)
    ordered = sorted(results, key=lambda e: (
        e.f1 is None, -(e.f1 or 0.0), -(e.accuracy or 0.0), e.index))
    return Leaderboard(variant=variant, seed=seed, entries=tuple(ordered))


@dataclass(frozen=True)
class F1Grid:
    """Best F1 per (variant, family) cell, shaped like the published table."""

    variants: tuple[str, ...]
    families: tuple[str, ...]
    values: dict[tuple[str, str], Optional[float]]

    def row_best_family(self, variant: str) -> Optional[str]:
        best = None
        for family in self.families:
            v = self.values.get((variant, family))
            if v is not None and (best is None or v > self.values[(variant, best)]):
                best = family
        return best


def best_per_cell(leaderboards: Mapping[tuple[str, str], Leaderboard],
                  variants: Sequence[str] | None = None) -> F1Grid:
    """Collapse per-cell leaderboards to a max-F1 grid.

    Rows follow the variant order, columns the published family order; a
    missing cell stays absent and is flagged in the log.
    """
    variants = tuple(variants if variants is not None
                     else [v for v in VARIANTS if any(k[0] == v for k in leaderboards)])
    values: dict[tuple[str, str], Optional[float]] = {}
    for variant in variants:
        for family in TABLE_FAMILY_ORDER:
            board = leaderboards.get((variant, family))
            if board is None:
                values[(variant, family)] = None
                log.warning("missing leaderboard for cell (%s, %s)", variant, family)
                continue
            scored = [e.f1 for e in board.entries if e.f1 is not None]
            values[(variant, family)] = max(scored) if scored else None
    return F1Grid(variants=variants, families=TABLE_FAMILY_ORDER, values=values)


def split_by_family(board: Leaderboard) -> dict[str, Leaderboard]:
    by_family: dict[str, list[LeaderboardEntry]] = {}
    for entry in board.entries:
        by_family.setdefault(entry.spec.family, []).append(entry)
    return {fam: Leaderboard(board.variant, board.seed, tuple(entries))
            for fam, entries in by_family.items()}


# --- CSV forms (no wall-clock columns: outputs must be bit-stable) ---

LEADERBOARD_HEADER = ["variant", "rank", "family", "params", "seed", "f1", "accuracy", "error"]


def leaderboard_rows(board: Leaderboard) -> list[list]:
    rows = []
    for rank, e in enumerate(board.entries, 1):
        rows.append([
            board.variant, str(rank), e.spec.family,
            json.dumps(e.spec.params, sort_keys=True), str(e.spec.seed),
            format_number(e.f1), format_number(e.accuracy), e.error or "",
        ])
    return rows


def write_leaderboard_csv(path, boards: Sequence[Leaderboard]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LEADERBOARD_HEADER)
    for board in boards:
        writer.writerows(leaderboard_rows(board))
    atomic_write_text(path, buf.getvalue())


def read_leaderboard_csv(path) -> list[Leaderboard]:
    with open_text(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LEADERBOARD_HEADER:
            raise DataError(f"{path}: not a leaderboard CSV")
        by_variant: dict[str, list[LeaderboardEntry]] = {}
        for row in reader:
            if not row:
                continue
            variant, rank, family, params, seed, f1, accuracy, error = row
            entry = LeaderboardEntry(
                index=int(rank) - 1,
                spec=ModelSpec(family, json.loads(params), seed=int(seed)),
                f1=float(f1) if f1 else None,
                accuracy=float(accuracy) if accuracy else None,
                error=error or None,
            )
            by_variant.setdefault(variant, []).append(entry)
    return [Leaderboard(variant, 0, tuple(entries)) for variant, entries in by_variant.items()]


def write_grid_csv(path, grid: F1Grid) -> None:
    header = ["variant", "variant_label"] + [FAMILY_LABELS[f] for f in grid.families]
    rows = []
    for variant in grid.variants:
        row = [variant, VARIANT_LABELS.get(variant, variant)]
        row += [format_number(grid.values[(variant, f)]) for f in grid.families]
        rows.append(row)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def read_grid_csv(path) -> F1Grid:
    label_to_family = {FAMILY_LABELS[f]: f for f in TABLE_FAMILY_ORDER}
    with open_text(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["variant", "variant_label"]:
            raise DataError(f"{path}: not an F1 grid CSV")
        families = []
        for label in header[2:]:
            if label not in label_to_family:
                raise DataError(f"{path}: unknown model family column {label!r}")
            families.append(label_to_family[label])
        variants: list[str] = []
        values: dict[tuple[str, str], Optional[float]] = {}
        for row in reader:
            if not row:
                continue
            variant = row[0]
            variants.append(variant)
            for family, cell in zip(families, row[2:]):
                values[(variant, family)] = float(cell) if cell else None
    return F1Grid(tuple(variants), tuple(families), values)
