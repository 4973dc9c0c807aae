"""Forearm tension-display encoding and the perceptual-study toolkit.

The wearable display has a 75 mm slide range and a 2 N force ceiling. Bow
stretch maps linearly onto slide position; study patterns quantize the range
into four distance levels crossed with three force levels. Response logs
aggregate into row-normalized confusion matrices with force and distance
marginals.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

SLIDE_RANGE_MM = 75.0
MAX_FORCE_N = 2.0

FORCE_LEVELS = ("S", "M", "L")
DISTANCE_LEVELS = (1, 2, 3, 4)

# Only the 2 N ceiling is fixed by the display hardware; the mid and low
# levels are an evenly spread default and stay configurable.
DEFAULT_FORCE_TABLE = {"S": 2.0, "M": 1.25, "L": 0.5}


@dataclass(frozen=True)
class ContactCommand:
    """Target slide position (mm) and normal force (N) for the display.

    Values outside the physical range saturate rather than raise: the
    hardware clamps anyway, so the type mirrors that.
    """

    slide_pos: float
    normal_force: float

    def __post_init__(self):
        object.__setattr__(
            self, "slide_pos", float(min(max(self.slide_pos, 0.0), SLIDE_RANGE_MM))
        )
        object.__setattr__(
            self, "normal_force", float(min(max(self.normal_force, 0.0), MAX_FORCE_N))
        )

    def record(self) -> str:
        """One-line text record for a hardware bridge stream."""
        return f"{self.slide_pos!r},{self.normal_force!r}"


RELEASE_COMMAND = ContactCommand(0.0, 0.0)


@dataclass(frozen=True, order=True)
class TactilePattern:
    """One of the 12 study stimuli: distance level 1-4 crossed with S/M/L."""

    distance_level: int
    force_level: str

    def __post_init__(self):
        if self.distance_level not in DISTANCE_LEVELS:
            raise ValueError(f"distance_level must be 1..4, got {self.distance_level}")
        if self.force_level not in FORCE_LEVELS:
            raise ValueError(f"force_level must be one of S/M/L, got {self.force_level}")

    @property
    def label(self) -> str:
        return f"{self.distance_level}{self.force_level}"

    @classmethod
    def from_label(cls, label: str) -> "TactilePattern":
        label = label.strip()
        if len(label) != 2:
            raise ValueError(f"bad pattern label {label!r}")
        return cls(int(label[0]), label[1])


ALL_PATTERNS = tuple(
    TactilePattern(d, f) for d in DISTANCE_LEVELS for f in FORCE_LEVELS
)

_PATTERN_INDEX = {p: i for i, p in enumerate(ALL_PATTERNS)}
_FORCE_INDEX = {f: i for i, f in enumerate(FORCE_LEVELS)}
_DISTANCE_INDEX = {d: i for i, d in enumerate(DISTANCE_LEVELS)}


@dataclass
class StudySchedule:
    """Ordered stimulus presentation list with fixed onset spacing."""

    items: list  # of (TactilePattern, onset seconds)
    seed: int
    interval_s: float = 10.0

    def __len__(self) -> int:
        return len(self.items)

    def to_csv(self) -> str:
        lines = ["trial,pattern,onset_s"]
        for k, (p, onset) in enumerate(self.items):
            lines.append(f"{k},{p.label},{float(onset)!r}")
        return "\n".join(lines) + "\n"


@dataclass
class ConfusionStats:
    """Row-normalized confusion percentages plus raw counts and rates.

    Rates are recognition percentages: diagonal counts over total counts.
    """

    full: np.ndarray
    full_counts: np.ndarray
    force: np.ndarray
    force_counts: np.ndarray
    distance: np.ndarray
    distance_counts: np.ndarray
    overall_rate: float
    force_rate: float
    distance_rate: float

    pattern_labels: tuple = field(
        default_factory=lambda: tuple(p.label for p in ALL_PATTERNS)
    )


def contact_from_stretch(stretch: float) -> float:
    """Linear map from bow stretch (m, saturating at 1 m) to slide mm."""
    if stretch < 0:
        raise ValueError(f"stretch must be non-negative, got {stretch}")
    return SLIDE_RANGE_MM * min(float(stretch), 1.0)


def gameplay_command(stretch: float, stiffness_force: float) -> ContactCommand:
    """Continuous in-game display command: slide from stretch, force from
    the configured bowstring stiffness (the force table is study-only)."""
    return ContactCommand(contact_from_stretch(stretch), stiffness_force)


def pattern_command(p: TactilePattern, force_table: dict | None = None) -> ContactCommand:
    """Display command for a study pattern: distance level k targets the
    k-th quartile of the slide range; force comes from the level table."""
    table = DEFAULT_FORCE_TABLE if force_table is None else force_table
    slide = SLIDE_RANGE_MM * p.distance_level / 4.0
    return ContactCommand(slide, table[p.force_level])


def make_schedule(seed: int, repeats: int = 3, interval_s: float = 10.0) -> StudySchedule:
    """Uniformly shuffled presentation order: every pattern `repeats` times,
    onsets spaced `interval_s` apart. Deterministic per seed."""
    rng = np.random.default_rng(seed)
    pool = list(ALL_PATTERNS) * repeats
    order = rng.permutation(len(pool))
    items = [(pool[int(i)], k * interval_s) for k, i in enumerate(order)]
    return StudySchedule(items=items, seed=seed, interval_s=interval_s)


def _coerce_pattern(p) -> TactilePattern:
    if isinstance(p, TactilePattern):
        return p
    if isinstance(p, str):
        return TactilePattern.from_label(p)
    raise ValueError(f"not a pattern: {p!r}")


def _row_percent(counts: np.ndarray) -> np.ndarray:
    out = np.zeros_like(counts, dtype=float)
    sums = counts.sum(axis=1)
    nz = sums > 0
    out[nz] = 100.0 * counts[nz] / sums[nz, None]
    return out


def _diag_rate(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    return 100.0 * float(np.trace(counts)) / float(total)


def confusion_stats(responses) -> ConfusionStats:
    """Aggregate (presented, answered) pairs into confusion matrices.

    Returns the full 12x12 matrix plus 3x3 force and 4x4 distance marginals,
    all row-normalized to percentages, with recognition rates computed as
    count-weighted diagonal means.
    """
    responses = list(responses)
    if not responses:
        raise ValueError("responses must be non-empty")

    full_counts = np.zeros((12, 12), dtype=np.int64)
    force_counts = np.zeros((3, 3), dtype=np.int64)
    distance_counts = np.zeros((4, 4), dtype=np.int64)

    for presented, answered in responses:
        pp = _coerce_pattern(presented)
        aa = _coerce_pattern(answered)
        full_counts[_PATTERN_INDEX[pp], _PATTERN_INDEX[aa]] += 1
        force_counts[_FORCE_INDEX[pp.force_level], _FORCE_INDEX[aa.force_level]] += 1
        distance_counts[
            _DISTANCE_INDEX[pp.distance_level], _DISTANCE_INDEX[aa.distance_level]
        ] += 1

    return ConfusionStats(
        full=_row_percent(full_counts),
        full_counts=full_counts,
        force=_row_percent(force_counts),
        force_counts=force_counts,
        distance=_row_percent(distance_counts),
        distance_counts=distance_counts,
        overall_rate=_diag_rate(full_counts),
        force_rate=_diag_rate(force_counts),
        distance_rate=_diag_rate(distance_counts),
    )


def read_responses_csv(text: str):
    """Parse a response log (trial, presented, answered, timestamp) into
    (presented, answered) pattern pairs. Header row required."""
    pairs = []
    reader = io.StringIO(text)
    header = reader.readline().strip().split(",")
    if header[:3] != ["trial", "presented", "answered"]:
        raise ValueError(f"unexpected response log header: {header}")
    for line in reader:
        line = line.strip()
        if not line:
            continue
        cols = line.split(",")
        pairs.append(
            (TactilePattern.from_label(cols[1]), TactilePattern.from_label(cols[2]))
        )
    return pairs


def responses_to_csv(pairs, timestamps=None) -> str:
    lines = ["trial,presented,answered,timestamp"]
    for k, (p, a) in enumerate(pairs):
        ts = 0.0 if timestamps is None else timestamps[k]
        lines.append(
            f"{k},{_coerce_pattern(p).label},{_coerce_pattern(a).label},{float(ts)!r}"
        )
    return "\n".join(lines) + "\n"


def matrix_to_csv(matrix: np.ndarray, labels) -> str:
    """Render a confusion matrix with row/column labels as CSV."""
    labels = list(labels)
    if matrix.shape != (len(labels), len(labels)):
        raise ValueError(f"matrix shape {matrix.shape} does not fit {len(labels)} labels")
    lines = ["presented\\answered," + ",".join(str(b) for b in labels)]
    for lab, row in zip(labels, matrix):
        lines.append(f"{lab}," + ",".join(f"{float(v)!r}" for v in row))
    return "\n".join(lines) + "\n"
