"""Novelty scoring, threshold alarms, and the rule-based comparator.

The novelty of a window is the mean squared difference between the
autoencoder's outputs and its inputs over all 2k dimensions: zero for a
perfect reconstruction, growing as the input leaves the trained envelope.
Alarms group above-threshold minutes into episodes; the rule-based baseline
applies the same grouping to raw per-minute update totals so the two alarm
streams can be compared for lead time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .autoencoder import AutoencoderModel, DimensionMismatch, forward, reconstruct
from .features import WindowSample, window_matrix
from .series import MINUTE, MinuteSeries, format_minute_utc, parse_minute_utc

SOURCE_AUTOENCODER = "autoencoder"
SOURCE_RULE = "rule"

NOVELTY_CSV_HEADER = "minute_utc,novelty"


class UnsortedInput(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class BadQuantile(ValueError):
    pass


class BadAlarmReport(ValueError):
    pass


@dataclass(frozen=True)
class NoveltyPoint:
    """Novelty value for the window ending at ``minute_s``."""

    minute_s: int
    e: float


@dataclass(frozen=True)
class AlarmEvent:
    """A contiguous above-threshold episode."""

    start_s: int
    end_s: int
    peak_s: int
    peak_value: float
    source: str

    def __post_init__(self):
        if not self.start_s <= self.peak_s <= self.end_s:
            raise ValueError("alarm peak must lie within the event span")


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold in the scored units; gap is quiet minutes tolerated inside one event."""

    threshold: float
    group_gap_minutes: int = 60

    def __post_init__(self):
        if self.group_gap_minutes < 0:
            raise ValueError("group_gap_minutes must be >= 0")


def novelty(model: AutoencoderModel, x: WindowSample | np.ndarray) -> float:
    """Mean squared input/output difference over all dimensions."""
    vector = x.values if isinstance(x, WindowSample) else np.asarray(x, dtype=np.float64)
    residual = forward(model, vector) - vector
    return float(np.mean(residual * residual))


def score_series(
    model: AutoencoderModel, windows: Sequence[WindowSample]
) -> list[NoveltyPoint]:
    """One novelty point per window, aligned to the window's end minute."""
    if len(windows) == 0:
        return []
    X = window_matrix(windows)
    if X.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"windows have {X.shape[1]} dimensions, model expects {model.input_dim}"
        )
    residual = reconstruct(model, X) - X
    values = np.mean(residual * residual, axis=1)
    return [
        NoveltyPoint(w.end_minute_s, float(e)) for w, e in zip(windows, values)
    ]


def detect_alarms(
    points: Iterable[NoveltyPoint] | Iterable[tuple[int, float]],
    cfg: DetectorConfig,
    source: str = SOURCE_AUTOENCODER,
) -> list[AlarmEvent]:
    """Group above-threshold minutes into alarm events.

    A minute is an exceedance when its value is strictly greater than the
    threshold. Two exceedances belong to the same event when at most
    ``group_gap_minutes`` quiet minutes lie between them (adjacent minutes
    merge even with a gap of zero). Input must be in ascending minute order.
    """
    events: list[AlarmEvent] = []
    previous_minute = None
    start = end = peak_minute = None
    peak = -math.inf
    merge_span = (cfg.group_gap_minutes + 1) * MINUTE

    for point in points:
        minute_s, value = (point.minute_s, point.e) if isinstance(point, NoveltyPoint) else point
        if previous_minute is not None and minute_s <= previous_minute:
            raise UnsortedInput(
                f"points not in ascending minute order at {format_minute_utc(minute_s)}"
            )
        previous_minute = minute_s
        if value <= cfg.threshold:
            continue
        if start is not None and minute_s - end <= merge_span:
            end = minute_s
            if value > peak:
                peak = value
                peak_minute = minute_s
        else:
            if start is not None:
                events.append(AlarmEvent(start, end, peak_minute, peak, source))
            start = end = peak_minute = minute_s
            peak = value
    if start is not None:
        events.append(AlarmEvent(start, end, peak_minute, peak, source))
    return events


def rule_alarms(
    series: MinuteSeries,
    threshold: float,
    group_gap_minutes: int = 60,
) -> list[AlarmEvent]:
    """Threshold alarms on raw per-minute update totals (the rule baseline)."""
    totals = series.totals()
    pairs = ((series.minute_at(i), float(totals[i])) for i in range(len(series)))
    return detect_alarms(
        pairs, DetectorConfig(float(threshold), group_gap_minutes), source=SOURCE_RULE
    )


def suggest_threshold(
    points: Iterable[NoveltyPoint] | Iterable[float], q: float
) -> float:
    """Nearest-rank quantile of the values: rank ceil(q*N) of the sorted list."""
    if not 0.0 < q <= 1.0:
        raise BadQuantile(f"quantile must be in (0, 1], got {q}")
    values = [p.e if isinstance(p, NoveltyPoint) else float(p) for p in points]
    if not values:
        raise EmptyInput("cannot suggest a threshold from no points")
    values.sort()
    rank = math.ceil(q * len(values))
    return values[rank - 1]


def lead_time(
    ae_events: Sequence[AlarmEvent],
    rule_events: Sequence[AlarmEvent],
    match_window_minutes: int,
) -> list[tuple[AlarmEvent, AlarmEvent | None, int | None]]:
    """Greedy earliest-first pairing of autoencoder alarms with rule alarms.

    Each autoencoder event takes the earliest unclaimed rule event whose
    start lies within ±match_window_minutes of its own start. Lead is
    rule start minus autoencoder start in minutes, positive when the
    autoencoder fired earlier; unmatched events report None. Both inputs
    must be sorted by start time.
    """
    window_s = match_window_minutes * MINUTE
    claimed = [False] * len(rule_events)
    matches: list[tuple[AlarmEvent, AlarmEvent | None, int | None]] = []
    for ae in ae_events:
        found = None
        for i, rule in enumerate(rule_events):
            if claimed[i]:
                continue
            if rule.start_s > ae.start_s + window_s:
                break
            if rule.start_s >= ae.start_s - window_s:
                found = i
                break
        if found is None:
            matches.append((ae, None, None))
        else:
            claimed[found] = True
            rule = rule_events[found]
            matches.append((ae, rule, (rule.start_s - ae.start_s) // MINUTE))
    return matches


def write_novelty_csv(points: Sequence[NoveltyPoint]) -> str:
    """Render novelty points as CSV with full-precision values."""
    lines = [NOVELTY_CSV_HEADER]
    lines.extend(f"{format_minute_utc(p.minute_s)},{p.e!r}" for p in points)
    return "\n".join(lines) + "\n"


def read_novelty_csv(source: str | Iterable[str]) -> list[NoveltyPoint]:
    """Parse the novelty CSV format back into points."""
    lines = source.splitlines() if isinstance(source, str) else [ln.rstrip("\n") for ln in source]
    if not lines or lines[0].rstrip("\r") != NOVELTY_CSV_HEADER:
        raise ValueError(f"expected header {NOVELTY_CSV_HEADER!r}")
    points = []
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\r")
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ValueError(f"line {line_no}: expected 2 fields, got {len(fields)}")
        points.append(NoveltyPoint(parse_minute_utc(fields[0]), float(fields[1])))
    return points


def write_alarm_report(events: Sequence[AlarmEvent]) -> str:
    """Render alarm events as a JSON array."""
    document = [
        {
            "start": format_minute_utc(e.start_s),
            "end": format_minute_utc(e.end_s),
            "peak_minute": format_minute_utc(e.peak_s),
            "peak_value": e.peak_value,
            "source": e.source,
        }
        for e in events
    ]
    return json.dumps(document, indent=1) + "\n"


def read_alarm_report(data: str) -> list[AlarmEvent]:
    """Parse a JSON alarm report back into events."""
    try:
        document = json.loads(data)
    except json.JSONDecodeError as exc:
        raise BadAlarmReport(f"alarm report is not valid JSON: {exc}") from None
    if not isinstance(document, list):
        raise BadAlarmReport("alarm report must be a JSON array")
    events = []
    try:
        for entry in document:
            events.append(
                AlarmEvent(
                    start_s=parse_minute_utc(entry["start"]),
                    end_s=parse_minute_utc(entry["end"]),
                    peak_s=parse_minute_utc(entry["peak_minute"]),
                    peak_value=float(entry["peak_value"]),
                    source=str(entry["source"]),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise BadAlarmReport(f"alarm report entry is malformed: {exc}") from None
    return events
