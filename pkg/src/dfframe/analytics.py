"""Deepfake production counts and subgroup balance analytics.

A subgroup of ``n`` individuals with ``k`` usable videos each can yield
``y = k^2 * n * (n - 1)`` face swaps: every ordered pair of videos whose
owners differ.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import frame_io, svg
from .errors import DataError, ParameterError

INT64_MAX = 2 ** 63 - 1
DEFAULT_K_VALUES = (1, 2, 4, 8, 16)
DEFAULT_N_RANGE = range(1, 101)


def _check_count(value, name):
    if isinstance(value, bool):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    try:
        value = operator.index(value)
    except TypeError:
        raise ParameterError(f"{name} must be an integer, got {value!r}") from None
    if value < 0:
        raise ParameterError(f"{name} must be non-negative, got {value}")
    return value


def production_count(n, k) -> int:
    n = _check_count(n, "n")
    k = _check_count(k, "k")
    y = k * k * n * (n - 1) if n else 0
    if y > INT64_MAX:
        raise OverflowError(f"production count for n={n}, k={k} exceeds the 64-bit integer range")
    return y


@dataclass(frozen=True)
class SubgroupProfile:
    name: str
    n: int
    k: int

    def __post_init__(self):
        object.__setattr__(self, "n", _check_count(self.n, "n"))
        object.__setattr__(self, "k", _check_count(self.k, "k"))

    @property
    def real_videos(self) -> int:
        return self.n * self.k

    @property
    def deepfakes(self) -> int:
        return production_count(self.n, self.k)


@dataclass(frozen=True)
class BalanceRow:
    name: str
    n: int
    k: int
    real_videos: int
    deepfakes: int
    real_share: float
    deepfake_share: float
    amplification: float   # deepfake share / real share; nan when undefined


def balance_report(profiles) -> list[BalanceRow]:
    """Shares of real videos and of producible deepfakes per subgroup.

    Shares are computed with exact fractions and rounded once.
    """
    profiles = list(profiles)
    if not profiles:
        raise DataError("balance report needs at least one subgroup")
    names = [p.name for p in profiles]
    if len(set(names)) != len(names):
        raise DataError("subgroup names must be unique")
    total_real = sum(p.real_videos for p in profiles)
    total_fake = sum(p.deepfakes for p in profiles)
    if total_real == 0:
        raise DataError("all subgroups have zero real videos")
    rows = []
    for p in profiles:
        real_share = Fraction(p.real_videos, total_real)
        fake_share = Fraction(p.deepfakes, total_fake) if total_fake else None
        if fake_share is None or real_share == 0:
            amp = float("nan")
        else:
            amp = float(fake_share / real_share)
        rows.append(BalanceRow(p.name, p.n, p.k, p.real_videos, p.deepfakes, float(real_share),
                               float(fake_share) if fake_share is not None else float("nan"), amp))
    return rows


def format_balance(rows) -> str:
    lines = [f"{'Subgroup':<16}{'n':>6}{'k':>6}{'real':>10}{'deepfakes':>14}{'real %':>10}{'fake %':>10}{'amp':>8}"]
    for r in rows:
        lines.append(f"{r.name:<16}{r.n:>6}{r.k:>6}{r.real_videos:>10}{r.deepfakes:>14}"
                     f"{100 * r.real_share:>10.2f}{100 * r.deepfake_share:>10.2f}{r.amplification:>8.3f}")
    return "\n".join(lines) + "\n"


def write_balance(rows, out_dir):
    out = Path(out_dir)
    frame_io.write_csv(out / "balance.csv",
                       ("subgroup", "n", "k", "real_videos", "deepfakes", "real_share", "deepfake_share",
                        "amplification"),
                       [(r.name, r.n, r.k, r.real_videos, r.deepfakes, frame_io.fmt(r.real_share),
                         frame_io.fmt(r.deepfake_share), frame_io.fmt(r.amplification)) for r in rows])
    frame_io.atomic_write_text(out / "balance.txt", format_balance(rows))


def production_curve(k_values=DEFAULT_K_VALUES, n_range=DEFAULT_N_RANGE) -> list[tuple]:
    """(n, k, y) over the grid, ordered by k then n."""
    return [(n, k, production_count(n, k)) for k in k_values for n in n_range]


def write_production_curve(table, out_dir):
    out = Path(out_dir)
    frame_io.write_csv(out / "production_curve.csv", ("n", "k", "y"), table)
    series = {}
    for n, k, y in table:
        xs, ys = series.setdefault(f"k = {k}", ([], []))
        xs.append(n)
        ys.append(y)
    frame_io.atomic_write_text(out / "production_curve.svg",
                               svg.line_plot(series, "Number of individuals n", "Potential deepfakes y",
                                             "Potential deepfake dataset size for n individuals", logy=True))


def enumerate_pairs(n, k) -> int:
    """Brute-force count of ordered video pairs with different owners."""
    owners = [i for i in range(n) for _ in range(k)]
    return sum(1 for a in owners for b in owners if a != b)


def read_profiles(path) -> list[SubgroupProfile]:
    """CSV with columns name, n, k."""
    rows = frame_io.read_csv(path)
    if rows and set(rows[0]) != {"name", "n", "k"}:
        raise DataError(f"{path}: profile file needs columns name, n, k")
    try:
        return [SubgroupProfile(r["name"], int(r["n"]), int(r["k"])) for r in rows]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
