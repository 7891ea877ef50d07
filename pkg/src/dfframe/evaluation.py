"""Precision-recall evaluation and McNemar exact-binomial significance tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path

import numpy as np

from . import frame_io, svg
from .errors import CoverageError, DataError, PairingError
from .synthetic import TAGS

ALPHA = 0.05
RECALL_LEVELS = (0.1, 0.5, 0.9)
SUBSET_ORDER = TAGS


@dataclass(frozen=True)
class Prediction:
    video_id: str
    subset: str
    score: float
    label: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise DataError(f"score {self.score} for {self.video_id} outside [0, 1]")
        if self.label not in (0, 1):
            raise DataError(f"label {self.label} for {self.video_id} is not 0 or 1")


@dataclass
class PRCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray

    def points(self):
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist()))


def pr_curve(scores, labels) -> PRCurve:
    """Operating points at each distinct score, highest threshold first.

    A sample is called fake when its score is >= the threshold; tied scores
    share one operating point.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0 or n_pos == len(labels):
        raise DataError("PR curve needs at least one positive and one negative sample")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y == 1)
    fp = np.cumsum(y == 0)
    # last index of each run of equal scores
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tp, fp = tp[last], fp[last]
    return PRCurve(s[last], tp / (tp + fp), tp / n_pos)


def auc(curve: PRCurve) -> float:
    """Trapezoidal area under precision over recall, anchored at recall 0
    with the first point's precision."""
    r = np.r_[0.0, curve.recall]
    p = np.r_[curve.precision[0], curve.precision]
    return float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2.0))


def precision_at_recall(curve: PRCurve, r: float) -> float:
    hits = np.nonzero(curve.recall >= r - 1e-12)[0]
    if len(hits) == 0:
        raise CoverageError(f"curve never reaches recall {r}")
    return float(curve.precision[hits[0]])


@dataclass(frozen=True)
class ContingencyTable:
    a: int  # both correct
    b: int  # A correct only
    c: int  # B correct only
    d: int  # both wrong

    @property
    def n(self):
        return self.a + self.b + self.c + self.d


def _index(preds):
    out = {}
    for p in preds:
        if p.video_id in out:
            raise PairingError(f"duplicate video id {p.video_id}")
        out[p.video_id] = p
    return out


def contingency_table(preds_a, preds_b, subset=None, threshold=0.5) -> ContingencyTable:
    """Pair two models' predictions by video id; correct means
    (score >= threshold) == (label is fake)."""
    ia = {k: v for k, v in _index(preds_a).items() if subset is None or v.subset == subset}
    ib = {k: v for k, v in _index(preds_b).items() if subset is None or v.subset == subset}
    if set(ia) != set(ib):
        diff = sorted(set(ia) ^ set(ib))
        raise PairingError(f"video ids differ between models: {diff[:5]}{'...' if len(diff) > 5 else ''}")
    counts = [0, 0, 0, 0]
    for vid in sorted(ia):
        pa, pb = ia[vid], ib[vid]
        if pa.label != pb.label:
            raise PairingError(f"label mismatch for video {vid}")
        ca = (pa.score >= threshold) == (pa.label == 1)
        cb = (pb.score >= threshold) == (pb.label == 1)
        counts[(0 if ca else 2) + (0 if cb else 1)] += 1
    return ContingencyTable(*counts)


@dataclass(frozen=True)
class McNemarResult:
    p_value: float
    alpha: float = ALPHA

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha

    @property
    def decision(self) -> str:
        return "reject H0" if self.reject else "accept H0"


def mcnemar_exact(table: ContingencyTable, alpha: float = ALPHA) -> McNemarResult:
    """Two-sided exact binomial test on the discordant counts, capped at 1."""
    n = table.b + table.c
    if n == 0:
        return McNemarResult(1.0, alpha)
    k = min(table.b, table.c)
    tail = Fraction(sum(comb(n, i) for i in range(k + 1)), 2 ** n)
    return McNemarResult(float(min(Fraction(1), 2 * tail)), alpha)


@dataclass
class SignificanceRow:
    pair: tuple
    subset: str
    table: ContingencyTable
    result: McNemarResult


@dataclass
class EvalReport:
    auc: dict = field(default_factory=dict)                  # model -> AUC
    precision_at_recall: dict = field(default_factory=dict)  # model -> {r: precision}
    curves: dict = field(default_factory=dict)               # model -> PRCurve
    significance: list = field(default_factory=list)         # SignificanceRow

    def significance_table(self, pair):
        return [row for row in self.significance if row.pair == tuple(pair)]


def significance_report(predictions: dict, pairs, subsets) -> list:
    """One McNemar test per (pair, subset)."""
    rows = []
    for pair in pairs:
        a, b = pair
        for name in (a, b):
            if name not in predictions:
                raise CoverageError(f"no predictions for model {name}")
        for subset in subsets:
            have_a = any(p.subset == subset for p in predictions[a])
            have_b = any(p.subset == subset for p in predictions[b])
            if not (have_a and have_b):
                raise CoverageError(f"subset {subset!r} missing for pair {a}/{b}")
            table = contingency_table(predictions[a], predictions[b], subset)
            rows.append(SignificanceRow(tuple(pair), subset, table, mcnemar_exact(table)))
    return rows


def evaluate(predictions: dict, pairs, subsets) -> EvalReport:
    report = EvalReport()
    for model, preds in predictions.items():
        curve = pr_curve([p.score for p in preds], [p.label for p in preds])
        report.curves[model] = curve
        report.auc[model] = auc(curve)
        report.precision_at_recall[model] = {r: precision_at_recall(curve, r) for r in RECALL_LEVELS}
    report.significance = significance_report(predictions, pairs, subsets)
    return report


# ---- files -----------------------------------------------------------------

def write_predictions(path, preds):
    lines = ["video_id\tsubset\tscore\tlabel\n"]
    lines += [f"{p.video_id}\t{p.subset}\t{frame_io.fmt(p.score)}\t{p.label}\n" for p in preds]
    frame_io.atomic_write_text(path, "".join(lines))


def read_predictions(path) -> list:
    out = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["video_id", "subset", "score", "label"]:
            raise DataError(f"{path}: unexpected prediction header {header}")
        for line in fh:
            if not line.strip():
                continue
            vid, subset, score, label = line.rstrip("\n").split("\t")
            out.append(Prediction(vid, subset, float(score), int(label)))
    return out


def order_subsets(subsets):
    known = [s for s in SUBSET_ORDER if s in subsets]
    return known + sorted(set(subsets) - set(known))


def format_report(report: EvalReport, model_order) -> str:
    lines = ["Recall-precision AUC", "", f"{'Model':<8}{'AUC':>8}"]
    for m in model_order:
        lines.append(f"{m:<8}{report.auc[m]:>8.3f}")
    lines += ["", "Precision at recall", "",
              f"{'Model':<8}" + "".join(f"{'r=' + str(r):>8}" for r in RECALL_LEVELS)]
    for m in model_order:
        lines.append(f"{m:<8}" + "".join(f"{report.precision_at_recall[m][r]:>8.3f}" for r in RECALL_LEVELS))
    pairs = []
    for row in report.significance:
        if row.pair not in pairs:
            pairs.append(row.pair)
    for pair in pairs:
        lines += ["", f"Statistical significance: {pair[0]} and {pair[1]}", "",
                  f"{'Evaluation subset':<20}{'b':>5}{'c':>5}{'p-value':>10}  decision"]
        for row in report.significance_table(pair):
            lines.append(f"{row.subset:<20}{row.table.b:>5}{row.table.c:>5}"
                         f"{_fmt_p(row.result.p_value):>10}  {row.result.decision}")
    return "\n".join(lines) + "\n"


def _fmt_p(p):
    return "1" if p == 1.0 else f"{p:.3g}"


def write_report_files(report: EvalReport, out_dir, model_order):
    out = Path(out_dir)
    frame_io.write_csv(out / "auc.csv", ("model", "auc"), [(m, frame_io.fmt(report.auc[m])) for m in model_order])
    frame_io.write_csv(out / "precision_at_recall.csv", ("model",) + tuple(f"recall_{r}" for r in RECALL_LEVELS),
                       [(m, *(frame_io.fmt(report.precision_at_recall[m][r]) for r in RECALL_LEVELS))
                        for m in model_order])
    frame_io.write_csv(out / "mcnemar.csv", ("model_a", "model_b", "subset", "a", "b", "c", "d", "p_value", "decision"),
                       [(r.pair[0], r.pair[1], r.subset, r.table.a, r.table.b, r.table.c, r.table.d,
                         frame_io.fmt(r.result.p_value), r.result.decision) for r in report.significance])
    for m in model_order:
        curve = report.curves[m]
        frame_io.write_csv(out / f"pr_curve_{m.lower()}.csv", ("threshold", "precision", "recall"),
                           [tuple(frame_io.fmt(v) for v in pt) for pt in curve.points()])
    series = {m: (np.r_[0.0, report.curves[m].recall], np.r_[report.curves[m].precision[0], report.curves[m].precision])
              for m in model_order}
    frame_io.atomic_write_text(out / "pr_curves.svg",
                               svg.line_plot(series, "Recall", "Precision", "Precision-recall curves",
                                             xlim=(0, 1), ylim=(0, 1)))
    frame_io.atomic_write_text(out / "report.txt", format_report(report, model_order))
