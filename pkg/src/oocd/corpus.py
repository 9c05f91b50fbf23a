"""Loading, validation, and addressing of image/caption samples.

The on-disk annotation format is UTF-8 JSON Lines: one object per row with
keys ``id`` (string), ``image_path`` (string, relative to an image root),
``caption`` (string), ``falsified`` (boolean), and ``split`` (one of
``train``/``val``/``test``). Unknown keys are preserved on the sample and
ignored by the pipeline, so round-tripping a file through
:func:`load_annotations` and :func:`save_annotations` keeps every field.

Validation is lenient by default: defective rows are collected into a
:class:`ValidationReport` instead of aborting, because real corpora always
contain some dead image paths. Strict mode turns any defect into a
:class:`~oocd.errors.CorpusValidationError`.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import CorpusValidationError, InsufficientSamples, ParseError

__all__ = [
    "Label",
    "SPLITS",
    "Sample",
    "CorpusManifest",
    "Defect",
    "ValidationReport",
    "load_annotations",
    "save_annotations",
    "merge_split_files",
    "summarize",
    "subsample",
]

SPLITS = ("train", "val", "test")

_REQUIRED_KEYS = ("id", "image_path", "caption", "falsified", "split")


class Label(enum.IntEnum):
    """Ground-truth label with a fixed numeric encoding.

    ``FALSIFIED`` is always 1 so that every score produced by this package
    reads as "probability that the pair is falsified", which removes any
    sign ambiguity from AUC values.
    """

    PRISTINE = 0
    FALSIFIED = 1

    @classmethod
    def from_falsified(cls, falsified: bool) -> "Label":
        return cls.FALSIFIED if falsified else cls.PRISTINE


@dataclass(frozen=True)
class Sample:
    """One image/caption pair with its label and split assignment."""

    id: str
    image_path: Path
    caption: str
    label: Label
    split: str
    extra: tuple[tuple[str, Any], ...] = ()

    def extra_map(self) -> dict[str, Any]:
        return dict(self.extra)

    def to_row(self, image_root: Path | None = None) -> dict[str, Any]:
        """Annotation-file row for this sample, unknown keys included."""
        path = self.image_path
        if image_root is not None:
            try:
                path = path.relative_to(image_root)
            except ValueError:
                pass
        row = {
            "id": self.id,
            "image_path": str(path),
            "caption": self.caption,
            "falsified": self.label is Label.FALSIFIED,
            "split": self.split,
        }
        row.update(self.extra_map())
        return row


@dataclass(frozen=True)
class CorpusManifest:
    """Per-split sample counts and class balance of a sample collection."""

    name: str
    root: str
    counts: Mapping[str, int]
    class_balance: Mapping[str, float]

    def total(self) -> int:
        return sum(self.counts.values())

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "root": self.root,
            "counts": dict(self.counts),
            "class_balance": dict(self.class_balance),
        }


@dataclass(frozen=True)
class Defect:
    """One validation problem, tied to the annotation line that caused it."""

    line: int
    code: str
    detail: str

    def render(self) -> str:
        return f"LINE {self.line}: {self.code}: {self.detail}"


@dataclass
class ValidationReport:
    """Ordered defect list plus the samples that survived validation."""

    samples: list[Sample] = field(default_factory=list)
    defects: list[Defect] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.defects

    def summary(self) -> str:
        """Plain-text report, one ``LINE <n>: <code>: <detail>`` per defect."""
        return "\n".join(d.render() for d in self.defects)


def _parse_row(raw: str, line_no: int, image_root: Path) -> Sample:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=line_no)
    if not isinstance(obj, dict):
        raise ParseError("row is not a JSON object", line=line_no)
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise ParseError(f"row is missing key '{key}'", line=line_no)
    sample_id = obj["id"]
    if not isinstance(sample_id, str) or not sample_id:
        raise ParseError("'id' must be a non-empty string", line=line_no)
    caption = obj["caption"]
    if not isinstance(caption, str) or not caption.strip():
        raise ParseError("'caption' must be non-empty text", line=line_no)
    falsified = obj["falsified"]
    if not isinstance(falsified, bool):
        raise ParseError("'falsified' must be a boolean", line=line_no)
    split = obj["split"]
    if split not in SPLITS:
        raise ParseError(f"'split' must be one of {SPLITS}, got {split!r}",
                         line=line_no)
    extra = tuple(sorted(
        (k, v) for k, v in obj.items() if k not in _REQUIRED_KEYS))
    return Sample(
        id=sample_id,
        image_path=image_root / obj["image_path"],
        caption=caption,
        label=Label.from_falsified(falsified),
        split=split,
        extra=extra,
    )


def load_annotations(path: str | Path, image_root: str | Path, *,
                     strict: bool = False) -> ValidationReport:
    """Load every annotation row, validating as it goes.

    Rows with malformed JSON, missing fields, or invalid values are
    rejected and reported as ``PARSE`` defects rather than silently
    skipped. Samples whose image file does not resolve are kept (caption
    and label remain usable downstream) but reported as ``MISSING_IMAGE``.
    Duplicate ids keep the first occurrence. With ``strict=True`` any
    defect raises :class:`CorpusValidationError`.
    """
    path = Path(path)
    image_root = Path(image_root)
    report = ValidationReport()
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                sample = _parse_row(raw, line_no, image_root)
            except ParseError as exc:
                report.defects.append(Defect(line_no, "PARSE", str(exc)))
                continue
            if sample.id in seen:
                report.defects.append(
                    Defect(line_no, "DUPLICATE_ID",
                           f"id '{sample.id}' already defined"))
                continue
            seen.add(sample.id)
            if not sample.image_path.is_file():
                report.defects.append(
                    Defect(line_no, "MISSING_IMAGE",
                           f"no readable file at '{sample.image_path}'"))
            report.samples.append(sample)
    if strict and report.defects:
        raise CorpusValidationError(
            f"{len(report.defects)} defect(s) in {path}:\n{report.summary()}",
            report.defects)
    return report


def save_annotations(samples: Iterable[Sample], path: str | Path,
                     image_root: str | Path | None = None) -> None:
    """Write samples back out as JSON Lines (inverse of load)."""
    path = Path(path)
    root = Path(image_root) if image_root is not None else None
    with path.open("w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(json.dumps(sample.to_row(root), sort_keys=True))
            handle.write("\n")


def merge_split_files(split_files: Mapping[str, str | Path],
                      output: str | Path) -> int:
    """Convert a per-split file layout into the single-file format.

    Each input may be JSON Lines, a JSON array of row objects, or a JSON
    object carrying an ``annotations`` array. Rows must already contain
    ``id``, ``image_path``, ``caption``, and ``falsified``; the split name
    is injected from the mapping key. Returns the number of rows written.
    """
    written = 0
    output = Path(output)
    with output.open("w", encoding="utf-8") as out:
        for split in SPLITS:
            if split not in split_files:
                continue
            for row in _iter_rows(Path(split_files[split])):
                if not isinstance(row, dict):
                    raise ParseError(f"non-object row in {split} file")
                row = dict(row)
                row["split"] = split
                out.write(json.dumps(row, sort_keys=True))
                out.write("\n")
                written += 1
    return written


def _iter_rows(path: Path):
    text = path.read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        yield from json.loads(text)
    elif stripped.startswith("{") and "\n{" not in text.strip():
        doc = json.loads(text)
        if "annotations" in doc:
            yield from doc["annotations"]
        else:
            yield doc
    else:
        for raw in text.splitlines():
            if raw.strip():
                yield json.loads(raw)


def summarize(samples: Sequence[Sample], *, name: str = "",
              root: str | Path = "") -> CorpusManifest:
    """Exact per-split counts and falsified fraction. Deterministic."""
    counts: dict[str, int] = {}
    falsified: dict[str, int] = {}
    for sample in samples:
        counts[sample.split] = counts.get(sample.split, 0) + 1
        if sample.label is Label.FALSIFIED:
            falsified[sample.split] = falsified.get(sample.split, 0) + 1
    balance = {
        split: falsified.get(split, 0) / n
        for split, n in counts.items()
    }
    ordered = {s: counts[s] for s in SPLITS if s in counts}
    ordered_balance = {s: balance[s] for s in SPLITS if s in balance}
    return CorpusManifest(name=name, root=str(root), counts=ordered,
                          class_balance=ordered_balance)


def subsample(samples: Sequence[Sample], n: int, seed: int) -> list[Sample]:
    """Deterministic subsample of ``n`` samples preserving class balance.

    Per-class quotas are the largest-remainder apportionment of ``n``
    over the observed class fractions, so the result stays within one
    sample per class of the source balance. Selection within a class is
    a seeded shuffle; the returned list keeps the original corpus order.
    """
    if n > len(samples):
        raise InsufficientSamples(
            f"requested {n} of {len(samples)} samples")
    if n == 0:
        return []
    by_label: dict[Label, list[int]] = {}
    for idx, sample in enumerate(samples):
        by_label.setdefault(sample.label, []).append(idx)

    labels = sorted(by_label)
    exact = {lab: n * len(by_label[lab]) / len(samples) for lab in labels}
    quota = {lab: int(exact[lab]) for lab in labels}
    short = n - sum(quota.values())
    for lab in sorted(labels, key=lambda l: exact[l] - quota[l], reverse=True):
        if short <= 0:
            break
        if quota[lab] < len(by_label[lab]):
            quota[lab] += 1
            short -= 1

    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for lab in labels:
        pool = by_label[lab]
        order = rng.permutation(len(pool))
        chosen.extend(pool[i] for i in order[:quota[lab]])
    return [samples[i] for i in sorted(chosen)]
