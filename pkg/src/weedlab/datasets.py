"""Dataset indexing, deterministic splitting, statistics, and validation.

The split shuffle is pinned to a specific PRNG (splitmix64) and shuffle
(Fisher-Yates) so the same seed reproduces the same split on any platform
or language:

1. sort image ids lexicographically (input order is irrelevant),
2. Fisher-Yates: for i = n-1 down to 1, j = next_u64() mod (i + 1), swap,
3. largest-remainder apportionment of n * ratios decides the block sizes;
   the shuffled list is cut into train, then val, then test.

Index files are JSON lines ({"image_id": ..., "labels": [...], "path": ...});
plain one-id-per-line files are also accepted where labels are not needed.
Prediction files are JSON lines with image_id, label, xmin, ymin, xmax,
ymax (0-based inclusive pixel coordinates) and score in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from PIL import Image, UnidentifiedImageError

from .boxes import BoundingBox
from .taxonomy import ClassLabel, Taxonomy, TaxonomyError, parse_label
from .voc import (
    IMAGE_EXTENSIONS,
    Annotation,
    BoxOutOfBounds,
    MalformedXml,
    UnknownLabel,
    read_voc_xml,
)


class EmptyIndex(ValueError):
    """Split requested over an index with no entries."""


class MalformedRecord(ValueError):
    """A prediction/index line cannot be parsed."""


class ScoreOutOfRange(ValueError):
    """Detection score outside [0, 1]."""


@dataclass(frozen=True)
class Detection:
    """One scored predicted box."""

    image_id: str
    label: ClassLabel
    box: BoundingBox
    score: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ScoreOutOfRange(f"score must lie in [0, 1], got {self.score!r}")


@dataclass(frozen=True)
class IndexEntry:
    image_id: str
    labels: tuple[ClassLabel, ...] = ()
    source: str = ""


class DatasetIndex:
    """Unique image ids with the class labels present on each image."""

    def __init__(self, entries: Iterable[IndexEntry]):
        self.entries: tuple[IndexEntry, ...] = tuple(entries)
        seen: set[str] = set()
        for e in self.entries:
            if e.image_id in seen:
                raise ValueError(f"duplicate image_id {e.image_id!r}")
            seen.add(e.image_id)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def image_ids(self) -> list[str]:
        return [e.image_id for e in self.entries]

    def counts(self) -> dict[ClassLabel, int]:
        """Frame tally per class: one count per entry that carries the label."""
        tally: dict[ClassLabel, int] = {}
        for e in self.entries:
            labels = e.labels if len(e.labels) <= 1 else set(e.labels)
            for label in labels:
                tally[label] = tally.get(label, 0) + 1
        return tally

    @classmethod
    def from_voc_dir(cls, root: str | Path, taxonomy: Taxonomy) -> "DatasetIndex":
        root = Path(root)
        entries = []
        for xml_path in sorted(root.glob("*.xml")):
            ann = read_voc_xml(xml_path.read_bytes(), taxonomy)
            labels = tuple(dict.fromkeys(obj.label for obj in ann.objects))
            entries.append(IndexEntry(image_id=xml_path.stem, labels=labels, source=str(xml_path)))
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path, taxonomy: Taxonomy | None = None) -> "DatasetIndex":
        """Read a JSONL index, or a plain id-per-line list (labels empty)."""
        entries = []
        path = Path(path)
        with path.open("r", encoding="utf-8") as stream:
            for lineno, raw in enumerate(stream, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("{"):
                    try:
                        record = json.loads(line)
                        image_id = record["image_id"]
                    except (json.JSONDecodeError, KeyError, TypeError) as exc:
                        raise MalformedRecord(f"{path}:{lineno}: bad index record") from exc
                    labels = tuple(
                        parse_label(text, taxonomy) for text in record.get("labels", [])
                    ) if taxonomy is not None else ()
                    entries.append(
                        IndexEntry(image_id=str(image_id), labels=labels, source=str(record.get("path", "")))
                    )
                else:
                    entries.append(IndexEntry(image_id=line))
        return cls(entries)


# --- deterministic split ----------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """The splitmix64 generator; tiny, seedable, and portable."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def fisher_yates(items: list, rng: SplitMix64) -> None:
    """In-place Fisher-Yates shuffle driven by rng (j = u64 mod (i + 1))."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        items[i], items[j] = items[j], items[i]


def largest_remainder(total: int, ratios: tuple[float, ...]) -> list[int]:
    """Apportion total into integer parts proportional to ratios.

    Floor each quota, then hand the leftover units to the largest
    fractional parts (ties favor the earlier ratio).
    """
    if any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be positive, got {ratios}")
    if abs(math.fsum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    quotas = [total * r for r in ratios]
    sizes = [int(math.floor(q)) for q in quotas]
    leftover = total - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


@dataclass(frozen=True)
class SplitResult:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    seed: int
    ratios: tuple[float, float, float]


def split_ids(ids: Iterable[str], ratios: tuple[float, float, float], seed: int) -> SplitResult:
    pool = sorted(ids)
    if not pool:
        raise EmptyIndex("nothing to split")
    sizes = largest_remainder(len(pool), tuple(ratios))
    fisher_yates(pool, SplitMix64(seed))
    a, b = sizes[0], sizes[0] + sizes[1]
    return SplitResult(
        train=tuple(pool[:a]),
        val=tuple(pool[a:b]),
        test=tuple(pool[b:]),
        seed=seed,
        ratios=tuple(ratios),
    )


def split_dataset(index: DatasetIndex, ratios: tuple[float, float, float], seed: int) -> SplitResult:
    """Shuffle the index's image ids and cut train/val/test blocks."""
    return split_ids(index.image_ids, ratios, seed)


# --- statistics --------------------------------------------------------------

@dataclass(frozen=True)
class DatasetStats:
    """Per-(species, week) frame counts in taxonomy order."""

    per_class: dict[ClassLabel, int]
    species_totals: dict[str, int]
    grand_total: int


def dataset_stats(index: DatasetIndex, taxonomy: Taxonomy) -> DatasetStats:
    counts = index.counts()
    per_class = {label: counts.get(label, 0) for label in taxonomy.labels}
    species_totals = {s.code: 0 for s in taxonomy.species_list}
    for label, n in per_class.items():
        species_totals[label.species.code] += n
    return DatasetStats(
        per_class=per_class,
        species_totals=species_totals,
        grand_total=sum(per_class.values()),
    )


# --- prediction ingestion -----------------------------------------------------

_REQUIRED_PREDICTION_FIELDS = ("image_id", "label", "xmin", "ymin", "xmax", "ymax", "score")


def _coerce_coord(value, name: str, lineno: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedRecord(f"line {lineno}: {name} must be a number, got {value!r}")
    if float(value) != int(value):
        raise MalformedRecord(f"line {lineno}: {name} must be integral, got {value!r}")
    return int(value)


def read_predictions(stream: Iterable[str], taxonomy: Taxonomy) -> list[Detection]:
    """Parse line-delimited JSON detections, preserving input order.

    Raises MalformedRecord / UnknownLabel / ScoreOutOfRange with the
    offending line number in the message.
    """
    detections: list[Detection] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"line {lineno}: not valid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise MalformedRecord(f"line {lineno}: expected a JSON object")
        missing = [k for k in _REQUIRED_PREDICTION_FIELDS if k not in record]
        if missing:
            raise MalformedRecord(f"line {lineno}: missing fields {missing}")
        try:
            label = parse_label(str(record["label"]), taxonomy)
        except TaxonomyError as exc:
            raise UnknownLabel(f"line {lineno}: {exc}") from exc
        coords = {k: _coerce_coord(record[k], k, lineno) for k in ("xmin", "ymin", "xmax", "ymax")}
        try:
            box = BoundingBox(**coords)
        except ValueError as exc:
            raise MalformedRecord(f"line {lineno}: {exc}") from exc
        score = record["score"]
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise MalformedRecord(f"line {lineno}: score must be a number")
        if not (0.0 <= float(score) <= 1.0):
            raise ScoreOutOfRange(f"line {lineno}: score {score!r} outside [0, 1]")
        detections.append(
            Detection(image_id=str(record["image_id"]), label=label, box=box, score=float(score))
        )
    return detections


def write_predictions(detections: Iterable[Detection]) -> str:
    """Serialize detections back to the JSONL interchange form."""
    lines = []
    for det in detections:
        lines.append(
            json.dumps(
                {
                    "image_id": det.image_id,
                    "label": det.label.canonical,
                    "xmin": det.box.xmin,
                    "ymin": det.box.ymin,
                    "xmax": det.box.xmax,
                    "ymax": det.box.ymax,
                    "score": det.score,
                },
                separators=(", ", ": "),
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


# --- dataset validation --------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    path: str
    code: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)
    checked_annotations: int = 0
    checked_images: int = 0

    @property
    def ok(self) -> bool:
        return not self.findings


def _find_image(root: Path, stem: str) -> Path | None:
    for ext in IMAGE_EXTENSIONS:
        for candidate in (root / f"{stem}{ext}", root / f"{stem}{ext.upper()}"):
            if candidate.exists():
                return candidate
    return None


def validate_dataset(root: str | Path, taxonomy: Taxonomy) -> ValidationReport:
    """Check a directory of images + VOC files for consistency.

    Findings (never exceptions): malformed-xml, unknown-label,
    box-out-of-bounds, empty-annotation, missing-image, size-mismatch,
    undecodable-image, missing-annotation.
    """
    root = Path(root)
    report = ValidationReport()
    annotated_stems: set[str] = set()

    for xml_path in sorted(root.glob("*.xml")):
        report.checked_annotations += 1
        annotated_stems.add(xml_path.stem)
        rel = xml_path.name
        try:
            ann = read_voc_xml(xml_path.read_bytes(), taxonomy)
        except MalformedXml as exc:
            report.findings.append(Finding(rel, "malformed-xml", str(exc)))
            continue
        except UnknownLabel as exc:
            report.findings.append(Finding(rel, "unknown-label", str(exc)))
            continue
        except BoxOutOfBounds as exc:
            report.findings.append(Finding(rel, "box-out-of-bounds", str(exc)))
            continue
        if not ann.objects:
            report.findings.append(Finding(rel, "empty-annotation", "no objects"))
        image_path = _find_image(root, xml_path.stem)
        if image_path is None:
            report.findings.append(Finding(rel, "missing-image", f"no image file for stem {xml_path.stem!r}"))
            continue
        try:
            with Image.open(image_path) as img:
                width, height = img.size
        except (UnidentifiedImageError, OSError) as exc:
            report.findings.append(Finding(image_path.name, "undecodable-image", str(exc)))
            continue
        if (width, height) != (ann.width, ann.height):
            report.findings.append(
                Finding(
                    rel,
                    "size-mismatch",
                    f"annotation says {ann.width}x{ann.height}, image is {width}x{height}",
                )
            )

    for ext in IMAGE_EXTENSIONS:
        for image_path in sorted(root.glob(f"*{ext}")) + sorted(root.glob(f"*{ext.upper()}")):
            report.checked_images += 1
            if image_path.stem not in annotated_stems:
                report.findings.append(
                    Finding(image_path.name, "missing-annotation", f"no VOC file for stem {image_path.stem!r}")
                )
    return report
