"""Markdown report assembly: F1 grid, importances, error tables, trends.

The grid table mirrors the published layout: one row per data variant, one
column per model family, row maximum bolded (ties bold the leftmost
column).  Sections whose inputs are missing are omitted with a notice.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from .analysis import ErrorDiagnostics, EvalReport, TrendReport
from .automl import F1Grid, Leaderboard
from .features import VARIANT_LABELS
from .models import FAMILY_LABELS
from .models.importance import ImportanceReport


def _fmt(value: Optional[float], digits: int = 2) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def grid_markdown(grid: F1Grid) -> str:
    lines = ["| | " + " | ".join(FAMILY_LABELS[f] for f in grid.families) + " |",
             "|---" * (len(grid.families) + 1) + "|"]
    for variant in grid.variants:
        best = grid.row_best_family(variant)
        cells = []
        for family in grid.families:
            text = _fmt(grid.values.get((variant, family)))
            if family == best and text:
                text = f"**{text}**"
            cells.append(text)
        label = VARIANT_LABELS.get(variant, variant)
        lines.append("| " + " | ".join([label] + cells) + " |")
    return "\n".join(lines)


def leaderboard_markdown(board: Leaderboard, top: int = 10) -> str:
    lines = [f"Variant `{board.variant}`:", "",
             "| rank | family | F1 | accuracy | hyperparameters |",
             "|---|---|---|---|---|"]
    for rank, e in enumerate(board.entries[:top], 1):
        params = ", ".join(f"{k}={v}" for k, v in sorted(e.spec.params.items()))
        lines.append(f"| {rank} | {FAMILY_LABELS[e.spec.family]} | {_fmt(e.f1, 3)} | "
                     f"{_fmt(e.accuracy, 3)} | {params or '-'} |")
    return "\n".join(lines)


def eval_markdown(report: EvalReport) -> str:
    return "\n".join([
        "| metric | value |",
        "|---|---|",
        f"| true positives | {report.tp} |",
        f"| false positives | {report.fp} |",
        f"| false negatives | {report.fn} |",
        f"| true negatives | {report.tn} |",
        f"| precision | {report.precision:.4f} |",
        f"| recall | {report.recall:.4f} |",
        f"| F1 | {report.f1:.4f} |",
        f"| accuracy | {report.accuracy:.4f} |",
    ])


def importance_markdown(report: ImportanceReport, top: int = 10) -> str:
    lines = [f"Method: `{report.method}`", "",
             "| rank | feature | relative importance |", "|---|---|---|"]
    for rank, (name, _raw, rel) in enumerate(report.ranked()[:top], 1):
        lines.append(f"| {rank} | {name} | {rel:.4f} |")
    return "\n".join(lines)


def diagnostics_markdown(diag: ErrorDiagnostics, top: int = 5) -> str:
    blocks = []
    for group, title in (("FN", "False negatives (missed communities)"),
                         ("FP", "False positives (flagged but not labeled)")):
        tracts = diag.group_tracts.get(group, ())
        if not tracts:
            blocks.append(f"### {title}\n\nNo {group} tracts.")
            continue
        by_name = {d.indicator: d for d in diag.deltas[group]}
        lines = [f"### {title}", "", f"{len(tracts)} tract(s).", "",
                 "| rank | indicator | group median pct | TP median pct | delta |",
                 "|---|---|---|---|---|"]
        for rank, name in enumerate(diag.ranking[group][:top], 1):
            d = by_name[name]
            lines.append(f"| {rank} | {name} | {_fmt(d.group_median, 1)} | "
                         f"{_fmt(d.reference_median, 1)} | {_fmt(d.delta, 1)} |")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def trend_markdown(trend: TrendReport) -> str:
    features = list(trend.feature_means)
    header = "| year | predicted DAC count | " + " | ".join(features) + " |"
    lines = [header, "|---" * (len(features) + 2) + "|"]
    for i, year in enumerate(trend.years):
        cells = [str(year), str(trend.counts[i])]
        cells += [f"{trend.feature_means[f][i]:.5f}" for f in features]
        lines.append("| " + " | ".join(cells) + " |")
    lines += ["", f"Correlation of each feature's yearly mean with the DAC count "
                  f"({trend.method}):", "",
              "| feature | r |", "|---|---|"]
    for f in features:
        r = trend.correlations.get(f)
        lines.append(f"| {f} | {_fmt(r, 4) if r is not None else 'n/a (constant series)'} |")
    return "\n".join(lines)


def emit_report(
    grid: Optional[F1Grid] = None,
    leaderboards: Optional[Sequence[Leaderboard]] = None,
    eval_report: Optional[EvalReport] = None,
    importances: Optional[Mapping[str, ImportanceReport]] = None,
    diagnostics: Optional[ErrorDiagnostics] = None,
    trend: Optional[TrendReport] = None,
    title: str = "Community classification report",
) -> str:
    """One markdown document; missing sections are omitted with a notice."""
    parts = [f"# {title}"]

    def section(name: str, body: Optional[str]):
        parts.append(f"\n## {name}\n")
        parts.append(body if body is not None else "_Section omitted: no input supplied._")

    section("Feature engineering and model selection (best F1 per cell)",
            grid_markdown(grid) if grid is not None else None)
    if leaderboards:
        section("Leaderboards", "\n\n".join(leaderboard_markdown(b) for b in leaderboards))
    else:
        section("Leaderboards", None)
    section("Evaluation", eval_markdown(eval_report) if eval_report is not None else None)
    if importances:
        body = "\n\n".join(f"### {label}\n\n{importance_markdown(rep)}"
                           for label, rep in importances.items())
        section("Feature importance", body)
    else:
        section("Feature importance", None)
    section("Error diagnostics",
            diagnostics_markdown(diagnostics) if diagnostics is not None else None)
    section("Historical estimates", trend_markdown(trend) if trend is not None else None)
    return "\n".join(parts) + "\n"
