"""Side-by-side rendering of an original and a debiased metrics report."""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .errors import DataFormatError
from .metrics import MetricsReport, fmt

__all__ = ["ROWS", "relative_improvement", "render_improvement", "compare", "render_comparison"]

# (field, label, higher_is_better)
ROWS = (
    ("mean_accuracy", "Mean Acc.", True),
    ("top_class_dominance", "Top-class dominance", False),
    ("cobias", "COBias", False),
    ("gini", "Gini", False),
)


def _round(value: float, digits: int) -> float:
    return float(Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-digits), ROUND_HALF_UP))


def relative_improvement(
    before: Optional[float], after: Optional[float], digits: Optional[int] = 2
) -> Optional[float]:
    """``(after - before) / before`` on the values as displayed.

    Both values are rounded to ``digits`` decimals first (``None`` skips the
    rounding) so the percentage agrees with the printed table. Returns
    ``None`` when either value is undefined or ``before`` is zero.
    """
    if before is None or after is None:
        return None
    if digits is not None:
        before, after = _round(before, digits), _round(after, digits)
    if before == 0:
        return None
    return (after - before) / before


def render_improvement(change: Optional[float]) -> str:
    if change is None:
        return "n/a"
    pct = int(Decimal(repr(float(abs(change) * 100))).quantize(Decimal(1), ROUND_HALF_UP))
    if pct == 0:
        return "0%"
    return f"{'↑' if change > 0 else '↓'} {pct}%"


def compare(before: MetricsReport, after: MetricsReport, digits: int = 2) -> dict:
    if before.n != after.n:
        raise DataFormatError(
            f"reports cover different class counts ({before.n} vs {after.n})"
        )
    rows = []
    for name, label, higher in ROWS:
        b, a = getattr(before, name), getattr(after, name)
        change = relative_improvement(b, a, digits)
        rows.append(
            {
                "metric": name,
                "label": label,
                "better": "higher" if higher else "lower",
                "before": b,
                "after": a,
                "relative_change": change,
                "rendered": render_improvement(change),
            }
        )
    return {
        "n_classes": before.n,
        "per_class_before": before.per_class.to_dict(),
        "per_class_after": after.per_class.to_dict(),
        "rows": rows,
    }


def render_comparison(before: MetricsReport, after: MetricsReport, digits: int = 2,
                      after_title: str = "Debiased") -> str:
    table = compare(before, after, digits)
    names = before.per_class.class_names or after.per_class.class_names
    names = names or tuple(f"class {i}" for i in range(before.n))
    label_w = max(len(r["label"]) + 4 for r in table["rows"])
    label_w = max(label_w, *(len(s) for s in names))
    lines = [f"{'':<{label_w}}  {'Original':>9}  {after_title:>9}  Relative improvement"]
    for i, name in enumerate(names):
        lines.append(
            f"{name:<{label_w}}  {before.per_class.accuracies[i]:>9.{digits}f}"
            f"  {after.per_class.accuracies[i]:>9.{digits}f}  -"
        )
    lines.append("")
    for r in table["rows"]:
        arrow = "↑" if r["better"] == "higher" else "↓"
        label = f"{r['label']} ({arrow})"
        lines.append(
            f"{label:<{label_w}}  {fmt(r['before'], digits):>9}  {fmt(r['after'], digits):>9}"
            f"  {r['rendered']}"
        )
    return "\n".join(lines)
