"""Benchmark manifest loading, stratified sampling, and taxonomy statistics.

A manifest is a UTF-8 JSONL file, one item per line, with exactly the fields
of :class:`BenchmarkItem`. Image files are referenced by path relative to the
manifest's own directory, so a manifest travels with its image tree. Loading
validates every item (schema, answer-mode consistency, image decodability)
and computes a content checksum over the canonical serialization, which is
independent of incidental formatting in the source file.
"""

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

ANSWER_MODES = frozenset({"mcq", "open"})
DOMAINS = frozenset({"mmvet", "mmmu", "cvbench"})

_ITEM_FIELDS = (
    "item_id",
    "image_path",
    "question",
    "gold_answer",
    "answer_mode",
    "domain",
    "subtask",
    "capability_tags",
)


class DatasetError(Exception):
    """Base class for manifest loading and sampling failures."""


class MissingImage(DatasetError):
    """An item's image file is absent or not decodable as a raster."""

    def __init__(self, item_id: str, detail: str = ""):
        self.item_id = item_id
        self.detail = detail
        msg = f"image for item {item_id!r} is missing or unreadable"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SchemaViolation(DatasetError):
    """A manifest line does not satisfy the item schema."""

    def __init__(self, line_no: int, field_name: str, detail: str = ""):
        self.line_no = line_no
        self.field = field_name
        self.detail = detail
        msg = f"manifest line {line_no}: invalid field {field_name!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DuplicateId(DatasetError):
    """Two manifest lines share the same item_id."""

    def __init__(self, item_id: str):
        self.item_id = item_id
        super().__init__(f"duplicate item_id {item_id!r}")


class QuotaUnsatisfiable(DatasetError):
    """A sampling quota asks for more items than a subtask provides."""

    def __init__(self, subtask: str, want: int, have: int):
        self.subtask = subtask
        self.want = want
        self.have = have
        super().__init__(
            f"subtask {subtask!r}: quota wants {want} items but only {have} available"
        )


class _ItemInvariantError(ValueError):
    """Internal: invariant failure tagged with the offending field name."""

    def __init__(self, field_name: str, detail: str):
        self.field = field_name
        self.detail = detail
        super().__init__(f"{field_name}: {detail}")


_OPTION_MARKER = re.compile(r"\(([A-Z])\)\s*")


def parse_mcq_options(question: str) -> Dict[str, str]:
    """Extract multiple-choice options of the form ``(A) text`` from a question.

    Options are recognized as a chain of ``(<letter>)`` markers whose letters
    run consecutively starting at ``A``; markers that do not continue the
    chain (stray parenthesized letters in prose) are left inside the
    preceding option's text. Returns an insertion-ordered mapping
    letter -> option text; empty when the question has no ``(A)`` marker.
    """
    markers = list(_OPTION_MARKER.finditer(question))
    start = next((i for i, m in enumerate(markers) if m.group(1) == "A"), None)
    if start is None:
        return {}
    chain = [markers[start]]
    for marker in markers[start + 1 :]:
        if marker.group(1) == chr(ord("A") + len(chain)):
            chain.append(marker)
    options: Dict[str, str] = {}
    for idx, marker in enumerate(chain):
        end = chain[idx + 1].start() if idx + 1 < len(chain) else len(question)
        options[marker.group(1)] = question[marker.end() : end].strip()
    return options


@dataclass(frozen=True)
class BenchmarkItem:
    """One image-question pair with its gold answer and taxonomy labels.

    ``answer_mode`` is ``"mcq"`` exactly when the gold answer is a single
    letter naming one of the options parsed from the question text; it is
    ``"open"`` otherwise. ``image_path`` is absolute once loaded from a
    manifest. Instances are immutable and safe to share across workers.
    """

    item_id: str
    image_path: Path
    question: str
    gold_answer: str
    answer_mode: str
    domain: str
    subtask: Optional[str] = None
    capability_tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "image_path", Path(self.image_path))
        object.__setattr__(self, "capability_tags", frozenset(self.capability_tags))
        if not self.item_id:
            raise _ItemInvariantError("item_id", "must be a non-empty string")
        if self.answer_mode not in ANSWER_MODES:
            raise _ItemInvariantError(
                "answer_mode", f"must be one of {sorted(ANSWER_MODES)}"
            )
        if self.domain not in DOMAINS:
            raise _ItemInvariantError("domain", f"must be one of {sorted(DOMAINS)}")
        options = parse_mcq_options(self.question)
        gold_is_letter = (
            len(self.gold_answer) == 1
            and "A" <= self.gold_answer <= "Z"
            and self.gold_answer in options
        )
        if self.answer_mode == "mcq" and not gold_is_letter:
            raise _ItemInvariantError(
                "gold_answer",
                "mcq items need a single-letter gold answer naming a parsed option",
            )
        if self.answer_mode == "open" and gold_is_letter:
            raise _ItemInvariantError(
                "answer_mode",
                "gold answer is an option letter; item must use answer_mode=mcq",
            )

    def options(self) -> Dict[str, str]:
        """Parsed multiple-choice options (empty for open-ended questions)."""
        return parse_mcq_options(self.question)


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered, validated collection of benchmark items.

    ``checksum`` is the SHA-256 hex digest of the canonical serialization
    (sorted JSON keys, compact separators, image paths relative to the
    manifest directory), so it is stable under reformatting of the source
    file and recomputes identically after a serialization round trip.
    """

    items: Tuple[BenchmarkItem, ...]
    source_tag: str
    checksum: str

    def __len__(self) -> int:
        return len(self.items)


def _canonical_record(item: BenchmarkItem, base_dir: Path) -> dict:
    rel = os.path.relpath(item.image_path, base_dir)
    return {
        "item_id": item.item_id,
        "image_path": rel.replace(os.sep, "/"),
        "question": item.question,
        "gold_answer": item.gold_answer,
        "answer_mode": item.answer_mode,
        "domain": item.domain,
        "subtask": item.subtask,
        "capability_tags": sorted(item.capability_tags),
    }


def _canonical_text(items: Sequence[BenchmarkItem], base_dir: Path) -> str:
    lines = [
        json.dumps(
            _canonical_record(item, base_dir),
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        )
        for item in items
    ]
    return "".join(line + "\n" for line in lines)


def _checksum(items: Sequence[BenchmarkItem], base_dir: Path) -> str:
    return hashlib.sha256(_canonical_text(items, base_dir).encode("utf-8")).hexdigest()


def _validate_image(item_id: str, path: Path) -> None:
    from PIL import Image

    if not path.is_file():
        raise MissingImage(item_id, f"no such file: {path}")
    try:
        with Image.open(path) as img:
            width, height = img.size
            img.verify()
    except Exception as exc:
        raise MissingImage(item_id, f"cannot decode {path.name}: {exc}") from exc
    if width < 1 or height < 1:
        raise MissingImage(item_id, f"degenerate raster {width}x{height}")


def _parse_line(line_no: int, raw: str, base_dir: Path) -> BenchmarkItem:
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(line_no, "line", f"not valid JSON: {exc.msg}") from exc
    if not isinstance(record, dict):
        raise SchemaViolation(line_no, "line", "expected a JSON object")

    for name in _ITEM_FIELDS:
        if name not in record:
            raise SchemaViolation(line_no, name, "missing")
    for name in record:
        if name not in _ITEM_FIELDS:
            raise SchemaViolation(line_no, name, "unknown field")

    for name in ("item_id", "image_path", "question", "gold_answer"):
        value = record[name]
        if not isinstance(value, str) or not value:
            raise SchemaViolation(line_no, name, "must be a non-empty string")
    for name, allowed in (("answer_mode", ANSWER_MODES), ("domain", DOMAINS)):
        if record[name] not in allowed:
            raise SchemaViolation(
                line_no, name, f"must be one of {sorted(allowed)}"
            )
    subtask = record["subtask"]
    if subtask is not None and (not isinstance(subtask, str) or not subtask):
        raise SchemaViolation(line_no, "subtask", "must be null or a non-empty string")
    tags = record["capability_tags"]
    if not isinstance(tags, list) or not all(
        isinstance(t, str) and t for t in tags
    ):
        raise SchemaViolation(
            line_no, "capability_tags", "must be a list of non-empty strings"
        )

    image_path = (base_dir / record["image_path"]).resolve()
    try:
        return BenchmarkItem(
            item_id=record["item_id"],
            image_path=image_path,
            question=record["question"],
            gold_answer=record["gold_answer"],
            answer_mode=record["answer_mode"],
            domain=record["domain"],
            subtask=subtask,
            capability_tags=frozenset(tags),
        )
    except _ItemInvariantError as exc:
        raise SchemaViolation(line_no, exc.field, exc.detail) from exc


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Load and validate a JSONL manifest.

    Every line is schema-checked, answer-mode consistency is enforced, and
    each referenced image must exist and decode. Raises
    :class:`SchemaViolation` (with line number and field),
    :class:`DuplicateId`, or :class:`MissingImage`. Ordering is preserved;
    blank lines are ignored.
    """
    path = Path(path)
    base_dir = path.parent.resolve()
    text = path.read_text(encoding="utf-8")

    items: List[BenchmarkItem] = []
    seen = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        item = _parse_line(line_no, raw, base_dir)
        if item.item_id in seen:
            raise DuplicateId(item.item_id)
        seen.add(item.item_id)
        _validate_image(item.item_id, item.image_path)
        items.append(item)

    return DatasetManifest(
        items=tuple(items),
        source_tag=path.stem,
        checksum=_checksum(items, base_dir),
    )


def make_manifest(
    items: Sequence[BenchmarkItem], source_tag: str, base_dir: Union[str, Path]
) -> DatasetManifest:
    """Assemble a manifest from in-memory items.

    ``base_dir`` is the directory the manifest will live in; the checksum is
    computed over image paths relative to it, matching what
    :func:`load_manifest` would compute after :func:`serialize_manifest`.
    """
    ids = [item.item_id for item in items]
    for item_id in ids:
        if ids.count(item_id) > 1:
            raise DuplicateId(item_id)
    return DatasetManifest(
        items=tuple(items),
        source_tag=source_tag,
        checksum=_checksum(items, Path(base_dir).resolve()),
    )


def serialize_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    """Write a manifest to ``path`` in canonical JSONL form.

    Image paths are written relative to ``path``'s directory. Loading the
    written file from the same directory reproduces the manifest exactly
    (items, checksum, and — when the file keeps the same stem — source_tag).
    """
    path = Path(path)
    base_dir = path.parent.resolve()
    path.write_text(_canonical_text(manifest.items, base_dir), encoding="utf-8")
    return path


def stratified_sample_cvbench(
    items: Sequence[BenchmarkItem],
    quotas: Mapping[str, int],
    seed: int,
) -> List[BenchmarkItem]:
    """Draw a per-subtask stratified sample via seeded shuffle + interval pick.

    For each quota subtask (processed in sorted order so the result depends
    only on the quota *contents*), the matching items are shuffled by a
    generator seeded from SHA-256 of ``"{seed}:{subtask}"`` — never the
    process-salted builtin hash — and every ``floor(n/k)``-th element of the
    shuffled order is taken: indices ``0, s, 2s, ...`` with ``s = n // k``.
    Deterministic for fixed (items, quotas, seed). Raises
    :class:`QuotaUnsatisfiable` when a subtask has fewer items than its quota.
    """
    pools: Dict[str, List[BenchmarkItem]] = {}
    for item in items:
        if item.subtask is not None:
            pools.setdefault(item.subtask, []).append(item)

    selected: List[BenchmarkItem] = []
    for subtask in sorted(quotas):
        want = quotas[subtask]
        if want < 0:
            raise ValueError(f"quota for {subtask!r} must be >= 0, got {want}")
        pool = pools.get(subtask, [])
        if len(pool) < want:
            raise QuotaUnsatisfiable(subtask, want, len(pool))
        if want == 0:
            continue
        digest = hashlib.sha256(f"{seed}:{subtask}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        order = rng.permutation(len(pool))
        stride = len(pool) // want
        selected.extend(pool[order[i * stride]] for i in range(want))
    return selected


def taxonomy_stats(
    manifest: DatasetManifest,
) -> Dict[Tuple[str, Optional[str], Optional[str]], int]:
    """Count items along the (domain, subtask, capability_tag) taxonomy.

    The result holds marginal counts at three granularities, with ``None``
    marking an unconstrained axis:

    - ``(domain, None, None)``: items per domain (these sum to the manifest
      length),
    - ``(domain, subtask, None)``: items per domain carrying that subtask,
    - ``(domain, None, tag)``: items per domain carrying that capability tag.

    Empty manifest yields an empty mapping.
    """
    stats: Dict[Tuple[str, Optional[str], Optional[str]], int] = {}

    def bump(key: Tuple[str, Optional[str], Optional[str]]) -> None:
        stats[key] = stats.get(key, 0) + 1

    for item in manifest.items:
        bump((item.domain, None, None))
        if item.subtask is not None:
            bump((item.domain, item.subtask, None))
        for tag in sorted(item.capability_tags):
            bump((item.domain, None, tag))
    return stats
