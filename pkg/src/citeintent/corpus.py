"""Citation-intent corpora: loading, input formatting, one-vs-all binarization,
and the CiTO object-property mapping.

Datasets are JSON-lines files, one record per line. Field names differ between
public releases, so a :class:`FieldMap` selects them; the built-in maps cover
the SciCite and ACL-ARC releases plus this package's canonical format. Loaded
datasets are immutable tuples and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

SETTINGS = ("WS", "WoS")
SPLITS = ("train", "val", "test")

_SPLIT_ALIASES = {
    "train": "train",
    "training": "train",
    "dev": "val",
    "val": "val",
    "validation": "val",
    "test": "test",
}

#: General-purpose CiTO property used when a classification is not reliable.
CITO_FALLBACK_IRI = "http://purl.org/spar/cito/citesForInformation"


class CorpusError(ValueError):
    """A dataset file could not be loaded cleanly.

    ``errors`` carries one line-numbered message per rejected record.
    """

    def __init__(self, message: str, errors: Sequence[str] = ()):
        super().__init__(message)
        self.errors = list(errors)


@dataclass(frozen=True)
class LabelSchema:
    """Ordered class catalogue of one dataset plus its CiTO object properties.

    The position of a class name in ``classes`` is its class index everywhere
    in this package (labels, binary tasks, probability layouts).
    """

    dataset_name: str
    classes: tuple[str, ...]
    cito_iris: Mapping[str, str]

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ValueError("a schema needs at least two classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("class names must be unique")
        if set(self.cito_iris) != set(self.classes):
            raise ValueError("cito_iris must map every class name exactly once")
        lowered = {name.strip().lower(): i for i, name in enumerate(self.classes)}
        if len(lowered) != len(self.classes):
            raise ValueError("class names collide case-insensitively")
        object.__setattr__(self, "_index_by_lower", lowered)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def index_of(self, name: str) -> int:
        """Resolve a class name case-insensitively, ignoring surrounding space."""
        try:
            return self._index_by_lower[name.strip().lower()]  # type: ignore[attr-defined]
        except KeyError:
            raise KeyError(f"unknown label {name!r} for schema {self.dataset_name!r}") from None


def cito_for(schema: LabelSchema, class_index: int) -> str:
    """CiTO IRI of one class."""
    if not 0 <= class_index < schema.num_classes:
        raise IndexError(f"class index {class_index} out of range for {schema.dataset_name!r}")
    return schema.cito_iris[schema.classes[class_index]]


SCICITE = LabelSchema(
    dataset_name="scicite",
    classes=("Method", "Background", "Result"),
    cito_iris={
        "Method": "http://purl.org/spar/cito/usesMethodIn",
        "Background": "http://purl.org/spar/cito/obtainsBackgroundFrom",
        "Result": "http://purl.org/spar/cito/usesConclusionsFrom",
    },
)

ACL_ARC = LabelSchema(
    dataset_name="acl-arc",
    classes=("Background", "Uses", "CompareOrContrast", "Extends", "Motivation", "Future"),
    cito_iris={
        "Background": "http://purl.org/spar/cito/obtainsBackgroundFrom",
        "Uses": "http://purl.org/spar/cito/usesMethodIn",
        "CompareOrContrast": "http://purl.org/spar/cito/discusses",
        "Extends": "http://purl.org/spar/cito/extends",
        "Motivation": "http://purl.org/spar/cito/obtainsSupportFrom",
        "Future": "http://purl.org/spar/cito/citesAsPotentialSolution",
    },
)

_BUILTIN_SCHEMAS = {"scicite": SCICITE, "acl-arc": ACL_ARC}


def builtin_schema(name: str) -> LabelSchema:
    try:
        return _BUILTIN_SCHEMAS[name.strip().lower()]
    except KeyError:
        raise KeyError(f"no built-in schema {name!r}; available: {sorted(_BUILTIN_SCHEMAS)}") from None


def load_schema(path: str | Path) -> LabelSchema:
    """Read a schema definition file (JSON: dataset_name, classes, cito_iris)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return LabelSchema(
        dataset_name=str(raw["dataset_name"]),
        classes=tuple(str(c) for c in raw["classes"]),
        cito_iris={str(k): str(v) for k, v in raw["cito_iris"].items()},
    )


def save_schema(schema: LabelSchema, path: str | Path) -> None:
    payload = {
        "dataset_name": schema.dataset_name,
        "classes": list(schema.classes),
        "cito_iris": dict(schema.cito_iris),
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class CitationInstance:
    """One labeled citation context.

    ``label`` is a class index into the governing schema. ``section_title`` is
    None when the source record has no usable title.
    """

    context: str
    label: int
    split: str
    section_title: str | None = None
    annotation_confidence: float | None = None

    def __post_init__(self) -> None:
        if not self.context.strip():
            raise ValueError("context is empty after whitespace trimming")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.label < 0:
            raise ValueError("label index must be non-negative")
        if self.annotation_confidence is not None and not 0.0 <= self.annotation_confidence <= 1.0:
            raise ValueError("annotation_confidence must lie in [0, 1]")


@dataclass(frozen=True)
class FormattedInput:
    """Classifier input text under one formatting setting (WS or WoS)."""

    text: str
    setting: str


@dataclass(frozen=True)
class BinaryDataset:
    """One one-vs-all view of a split: positives are the target class."""

    target_class: int
    items: tuple[tuple[FormattedInput, int], ...]

    @property
    def positive_count(self) -> int:
        return sum(k for _, k in self.items)

    def texts(self) -> list[str]:
        return [fi.text for fi, _ in self.items]

    def labels(self) -> list[int]:
        return [k for _, k in self.items]


@dataclass(frozen=True)
class FieldMap:
    """Names of the JSON fields holding each record component."""

    text: str
    label: str
    section: str | None = None
    split: str | None = None
    confidence: str | None = None


# Public releases.
SCICITE_FIELDS = FieldMap(text="string", label="label", section="sectionName", confidence="label_confidence")
ACL_ARC_FIELDS = FieldMap(text="text", label="intent", section="section_name")
# This package's own save format.
CANONICAL_FIELDS = FieldMap(
    text="context", label="label", section="section_title", split="split", confidence="annotation_confidence"
)


def detect_field_map(record: Mapping) -> FieldMap:
    """Pick a field map from the keys of the first record."""
    if "string" in record:
        return SCICITE_FIELDS
    if "context" in record:
        return CANONICAL_FIELDS
    if "text" in record and ("intent" in record or "section_name" in record):
        return ACL_ARC_FIELDS
    raise CorpusError(f"cannot detect a field mapping from record keys {sorted(record)[:8]}")


def _parse_record(
    record: Mapping, schema: LabelSchema, fm: FieldMap, default_split: str | None, lineno: int
) -> CitationInstance | str:
    text = record.get(fm.text)
    if not isinstance(text, str) or not text.strip():
        return f"line {lineno}: empty context"
    raw_label = record.get(fm.label)
    if not isinstance(raw_label, str):
        return f"line {lineno}: missing or non-text label field {fm.label!r}"
    try:
        label = schema.index_of(raw_label)
    except KeyError:
        return f"line {lineno}: unknown label {raw_label!r}"

    section = None
    if fm.section is not None:
        raw_section = record.get(fm.section)
        if isinstance(raw_section, str) and raw_section.strip():
            section = raw_section.strip()

    split = default_split
    if fm.split is not None and record.get(fm.split) is not None:
        raw_split = str(record[fm.split]).strip().lower()
        split = _SPLIT_ALIASES.get(raw_split)
        if split is None:
            return f"line {lineno}: unknown split {record[fm.split]!r}"
    if split is None:
        return f"line {lineno}: no split field and no default split given"

    confidence = None
    if fm.confidence is not None and record.get(fm.confidence) is not None:
        try:
            confidence = float(record[fm.confidence])
        except (TypeError, ValueError):
            return f"line {lineno}: non-numeric annotation confidence"
        if not 0.0 <= confidence <= 1.0:
            return f"line {lineno}: annotation confidence {confidence} outside [0, 1]"

    return CitationInstance(
        context=text.strip(),
        label=label,
        split=split,
        section_title=section,
        annotation_confidence=confidence,
    )


def load_dataset(
    path: str | Path,
    schema: LabelSchema,
    field_map: FieldMap | None = None,
    default_split: str | None = None,
) -> tuple[CitationInstance, ...]:
    """Load a JSON-lines citation dataset.

    ``path`` may be a single .jsonl file or a directory holding
    train/dev/val/test .jsonl files (each file then supplies its split).
    Every record is either parsed or rejected; rejections raise a
    :class:`CorpusError` carrying a line-numbered report.
    """
    path = Path(path)
    if path.is_dir():
        parts: list[CitationInstance] = []
        found = False
        for fname, split in (("train.jsonl", "train"), ("dev.jsonl", "val"), ("val.jsonl", "val"), ("test.jsonl", "test")):
            candidate = path / fname
            if candidate.exists():
                found = True
                parts.extend(load_dataset(candidate, schema, field_map, default_split=split))
        if not found:
            raise CorpusError(f"no train/dev/val/test .jsonl files under {path}")
        return tuple(parts)

    instances: list[CitationInstance] = []
    errors: list[str] = []
    fm = field_map
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(f"line {lineno}: malformed line ({exc.msg})")
                continue
            if not isinstance(record, dict):
                errors.append(f"line {lineno}: malformed line (expected a JSON object)")
                continue
            if fm is None:
                fm = detect_field_map(record)
            parsed = _parse_record(record, schema, fm, default_split, lineno)
            if isinstance(parsed, str):
                errors.append(parsed)
            else:
                instances.append(parsed)
    if errors:
        shown = "; ".join(errors[:20])
        more = "" if len(errors) <= 20 else f" (+{len(errors) - 20} more)"
        raise CorpusError(f"{len(errors)} bad record(s) in {path}: {shown}{more}", errors)
    return tuple(instances)


def save_dataset(instances: Iterable[CitationInstance], path: str | Path, schema: LabelSchema) -> None:
    """Write instances in the canonical JSON-lines format (CANONICAL_FIELDS)."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            record: dict = {
                "context": inst.context,
                "label": schema.classes[inst.label],
                "split": inst.split,
            }
            if inst.section_title is not None:
                record["section_title"] = inst.section_title
            if inst.annotation_confidence is not None:
                record["annotation_confidence"] = inst.annotation_confidence
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def format_text(section_title: str | None, context: str, setting: str) -> FormattedInput:
    """Build the classifier input text for one setting.

    WS prepends the section title followed by ". "; a missing or empty title
    falls back to the bare context (the setting tag stays WS so callers can
    surface the fallback). WoS always uses the bare context.
    """
    if setting not in SETTINGS:
        raise ValueError(f"setting must be one of {SETTINGS}, got {setting!r}")
    title = (section_title or "").strip()
    if setting == "WS" and title:
        return FormattedInput(f"{title}. {context}", "WS")
    return FormattedInput(context, setting)


def format_input(instance: CitationInstance, setting: str) -> FormattedInput:
    return format_text(instance.section_title, instance.context, setting)


def ova_binarize(
    instances: Sequence[CitationInstance], target_class: int, setting: str, num_classes: int
) -> BinaryDataset:
    """Project a split onto the binary task isolating ``target_class``.

    Item order is the source order; the binary label is 1 exactly where the
    multi-class label equals the target class.
    """
    if not 0 <= target_class < num_classes:
        raise ValueError(f"target_class {target_class} out of range for {num_classes} classes")
    items = tuple(
        (format_input(inst, setting), int(inst.label == target_class)) for inst in instances
    )
    return BinaryDataset(target_class=target_class, items=items)


def split_of(instances: Iterable[CitationInstance], split: str) -> tuple[CitationInstance, ...]:
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}")
    return tuple(inst for inst in instances if inst.split == split)
