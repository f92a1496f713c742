"""Image-to-SVG generation pipelines and the render-feedback revision loop.

Four ways to turn a benchmark item's image into SVG code:

- ``img2svg``: one direct conversion call;
- ``img2svg_thinking``: one call with a structured-analysis prompt whose
  reply mixes reasoning prose and code (the extractor skips the prose);
- ``img2text2svg``: caption the image, then generate code from the caption
  alone;
- ``vcoder``: tool-augmented generation (detection boxes, segmentation
  contours, OCR quads compiled into a metadata prompt) followed by T rounds
  of revision, where each round renders the current code, asks the coder to
  comment the differences against the original image, and asks it again to
  revise the code from that comment.

Every model call goes through templated_chat, so a PromptLog reconstructs
exactly what each prompt contained. Each revision round depends on the
previous render; items are independent of each other.
"""

import json
from dataclasses import dataclass, field
from typing import Callable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .bench_dataset import BenchmarkItem
from .geometry import (
    CannotSatisfy,
    DegeneratePolygon,
    EmptyMask,
    Polygon,
    mask_to_polygons,
    polygon_area,
    polygon_to_path_data,
    simplify_polygon_adaptive,
)
from .model_gateway import (
    IMAGE_ROLE_ORIGINAL,
    IMAGE_ROLE_RENDER,
    ModelEndpoint,
    PromptLog,
    templated_chat,
)
from .svg_toolkit import (
    NoSvgFound,
    NotRepairable,
    RenderedImage,
    RenderFailure,
    SvgDocument,
    UnbalancedTags,
    encode_png,
    extract_svg_code,
    find_svg_block,
    render_svg,
    sanitize_svg,
)
from .svg_toolkit.path_data import PathDataError, flatten_path
from .tool_client import ToolUnavailable

PIPELINE_NAMES = ("img2svg", "img2svg_thinking", "img2text2svg", "vcoder")

DEFAULT_REVISION_ROUNDS = 2
DEFAULT_MAX_DIM = 768


class CaptionEmpty(Exception):
    """The captioning stage returned no usable text."""


@dataclass(frozen=True)
class ToolsConfig:
    """Which vision tools feed the metadata prompt."""

    use_ocr: bool = True
    use_detection: bool = True
    use_shape: bool = True

    @classmethod
    def from_mapping(cls, value: Union["ToolsConfig", Mapping, None]) -> "ToolsConfig":
        if value is None:
            return cls()
        if isinstance(value, cls):
            return value
        return cls(
            use_ocr=bool(value.get("use_ocr", True)),
            use_detection=bool(value.get("use_detection", True)),
            use_shape=bool(value.get("use_shape", True)),
        )


@dataclass(frozen=True)
class ToolMetadata:
    """Vision-tool facts about one image, compiled for the metadata prompt.

    ``objects`` come sorted by descending confidence, each with an absolute
    pixel bbox and a closed outline path; ``ocr`` regions carry 4-point
    quads. ``degraded_tools`` names tools that failed and were omitted, so
    run records can flag partial metadata.
    """

    image_width: int
    image_height: int
    ocr: Tuple[dict, ...] = ()
    objects: Tuple[dict, ...] = ()
    dominant_colors: Optional[Tuple[str, ...]] = None
    degraded_tools: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be >= 1")
        for region in self.ocr:
            quad = region["quad"]
            if len(quad) != 4:
                raise ValueError("ocr quad needs exactly 4 corners")
            for x, y in quad:
                self._check_point(x, y, "ocr quad")
        last_conf = float("inf")
        for obj in self.objects:
            conf = float(obj["confidence"])
            if not 0.0 <= conf <= 1.0:
                raise ValueError(f"confidence {conf} outside [0, 1]")
            if conf > last_conf:
                raise ValueError("objects must be sorted by descending confidence")
            last_conf = conf
            x1, y1, x2, y2 = obj["bbox"]
            if not (x1 < x2 and y1 < y2):
                raise ValueError(f"degenerate bbox {obj['bbox']}")
            self._check_point(x1, y1, "bbox")
            self._check_point(x2, y2, "bbox")
            path = obj["svg_path"]
            if not path.rstrip().endswith("Z"):
                raise ValueError("svg_path must close with Z")
            try:
                flatten_path(path)
            except PathDataError as exc:
                raise ValueError(f"svg_path does not parse: {exc}") from exc

    def _check_point(self, x: float, y: float, what: str) -> None:
        if not (0 <= x <= self.image_width and 0 <= y <= self.image_height):
            raise ValueError(
                f"{what} point ({x}, {y}) outside "
                f"{self.image_width}x{self.image_height}"
            )

    def to_json_dict(self) -> dict:
        """Serialization order: image dims, ocr, objects (reproducible prompts)."""
        out = {
            "image_width": self.image_width,
            "image_height": self.image_height,
            "ocr": [
                {"text": r["text"], "quad": [[x, y] for x, y in r["quad"]]}
                for r in self.ocr
            ],
            "objects": [
                {
                    "label": o["label"],
                    "confidence": o["confidence"],
                    "bbox": list(o["bbox"]),
                    "svg_path": o["svg_path"],
                }
                for o in self.objects
            ],
        }
        if self.dominant_colors is not None:
            out["dominant_colors"] = list(self.dominant_colors)
        return out

    def metadata_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


@dataclass(frozen=True)
class RevisionRound:
    """One renderable state of the code: round index, code, its raster, and
    the difference comment that produced the *next* round (None on the
    final round of a completed trace)."""

    t: int
    code: SvgDocument
    render: RenderedImage
    diff_comment: Optional[str] = None


@dataclass(frozen=True)
class RevisionTrace:
    """The full revision history of one item.

    A completed trace has rounds 0..T, every round but the last carrying the
    difference comment that produced its successor. When a round's code
    cannot be extracted or rendered, the trace freezes at the last
    renderable round and ``failure_round``/``failure`` record what stopped
    it (``failure_round`` 0 means not even the initial code rendered).
    """

    rounds: Tuple[RevisionRound, ...]
    T: int
    metadata: Optional[ToolMetadata] = None
    failure_round: Optional[int] = None
    failure: Optional[str] = None

    def __post_init__(self):
        for idx, rnd in enumerate(self.rounds):
            if rnd.t != idx:
                raise ValueError("round indices must be contiguous from 0")
        if self.failure_round is None and self.rounds:
            if len(self.rounds) != self.T + 1:
                raise ValueError(
                    f"completed trace needs {self.T + 1} rounds, "
                    f"got {len(self.rounds)}"
                )
            if self.rounds[-1].diff_comment is not None:
                raise ValueError("final round must not carry a diff comment")
            for rnd in self.rounds[:-1]:
                if rnd.diff_comment is None:
                    raise ValueError(f"round {rnd.t} is missing its diff comment")
        if self.failure_round is None and not self.rounds:
            raise ValueError("a trace with no rounds must record its failure")

    @property
    def final(self) -> Optional[RevisionRound]:
        return self.rounds[-1] if self.rounds else None


# ---------------------------------------------------------------------------
# image loading


def item_image(item: BenchmarkItem) -> Tuple[bytes, int, int]:
    """The item's image as deterministic PNG bytes, plus (width, height).

    Source images may be any raster format; they are decoded to RGB and
    re-encoded with the fixed-parameter PNG writer so payload hashes are
    stable across Pillow versions.
    """
    from PIL import Image

    with Image.open(item.image_path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    height, width = rgb.shape[:2]
    return encode_png(rgb), width, height


def _document_from_reply(reply: str, origin: str) -> SvgDocument:
    return sanitize_svg(extract_svg_code(reply, origin=origin))


# ---------------------------------------------------------------------------
# single-shot pipelines


def run_img2svg(
    coder: ModelEndpoint,
    item: BenchmarkItem,
    *,
    log: Optional[PromptLog] = None,
    record: Optional[dict] = None,
) -> SvgDocument:
    """One direct image-to-code call; the reply is extracted and sanitized."""
    png, _, _ = item_image(item)
    result = templated_chat(
        coder,
        template_id="img2svg",
        images=[(IMAGE_ROLE_ORIGINAL, png)],
        log=log,
        item_id=item.item_id,
    )
    return _document_from_reply(result.text, origin="initial")


def run_img2text2svg(
    coder: ModelEndpoint,
    item: BenchmarkItem,
    *,
    log: Optional[PromptLog] = None,
    record: Optional[dict] = None,
) -> SvgDocument:
    """Caption the image, then generate code from the caption alone.

    The generation stage sees only the caption text — no image — which is
    the point of this mode. The caption is placed in ``record["caption"]``
    for run persistence. Raises :class:`CaptionEmpty` when the captioner
    returns blank text.
    """
    png, _, _ = item_image(item)
    caption_reply = templated_chat(
        coder,
        template_id="img2text2svg_caption",
        images=[(IMAGE_ROLE_ORIGINAL, png)],
        log=log,
        item_id=item.item_id,
    )
    caption = caption_reply.text.strip()
    if not caption:
        raise CaptionEmpty(f"captioner returned empty text for {item.item_id!r}")
    if record is not None:
        record["caption"] = caption
    generation = templated_chat(
        coder,
        template_id="img2text2svg_generate",
        bindings={"description": caption},
        log=log,
        item_id=item.item_id,
    )
    return _document_from_reply(generation.text, origin="initial")


def run_img2svg_thinking(
    coder: ModelEndpoint,
    item: BenchmarkItem,
    *,
    log: Optional[PromptLog] = None,
    record: Optional[dict] = None,
) -> SvgDocument:
    """One call with the structured-analysis prompt.

    The reply interleaves reasoning prose with the code; extraction takes
    the first complete svg block and the preceding prose is kept as
    ``record["rationale"]``.
    """
    png, _, _ = item_image(item)
    result = templated_chat(
        coder,
        template_id="img2svg_thinking",
        images=[(IMAGE_ROLE_ORIGINAL, png)],
        log=log,
        item_id=item.item_id,
    )
    if record is not None:
        block = find_svg_block(result.text)
        record["rationale"] = result.text[: result.text.find(block)].strip()
    return _document_from_reply(result.text, origin="initial")


# ---------------------------------------------------------------------------
# tool metadata


def _bbox_rect_path(bbox: Tuple[float, float, float, float]) -> str:
    x1, y1, x2, y2 = bbox
    return polygon_to_path_data(
        Polygon.from_vertices([(x1, y1), (x2, y1), (x2, y2), (x1, y2)])
    )


def _outline_path(mask: np.ndarray, bbox) -> str:
    """Largest component contour, simplified; falls back to the bbox rect."""
    try:
        polygons = mask_to_polygons(mask)
        largest = max(polygons, key=polygon_area)
        return polygon_to_path_data(simplify_polygon_adaptive(largest))
    except (EmptyMask, DegeneratePolygon, ValueError):
        return _bbox_rect_path(bbox)
    except CannotSatisfy:
        return _bbox_rect_path(bbox)


def _clamp_point(x: float, y: float, width: int, height: int) -> Tuple[float, float]:
    return (min(max(x, 0.0), float(width)), min(max(y, 0.0), float(height)))


def build_tool_metadata(
    item: BenchmarkItem,
    tools,
    config: Union[ToolsConfig, Mapping, None] = None,
) -> ToolMetadata:
    """Compile detection, segmentation, and OCR facts for one image.

    Enabled tools are queried through the client; each object's mask is
    simplified into a closed outline path (bbox rectangle when shape is
    disabled or segmentation fails). A tool raising
    :class:`~svgbench.tool_client.ToolUnavailable` degrades to an empty
    section and is listed in ``degraded_tools``. Disabled tools yield empty
    sections without using the client at all.
    """
    cfg = ToolsConfig.from_mapping(config)
    png, width, height = item_image(item)
    degraded: List[str] = []

    regions: List[dict] = []
    if cfg.use_ocr:
        try:
            raw_regions = tools.ocr(png) if tools is not None else []
        except ToolUnavailable:
            raw_regions = []
            degraded.append("ocr")
        for region in raw_regions:
            regions.append(
                {
                    "text": region["text"],
                    "quad": [
                        _clamp_point(x, y, width, height) for x, y in region["quad"]
                    ],
                }
            )

    objects: List[dict] = []
    if cfg.use_detection:
        try:
            detections = tools.detect(png) if tools is not None else []
        except ToolUnavailable:
            detections = []
            degraded.append("detect")
        segment_failed = False
        for det in detections:
            x1, y1 = _clamp_point(det["bbox"][0], det["bbox"][1], width, height)
            x2, y2 = _clamp_point(det["bbox"][2], det["bbox"][3], width, height)
            if not (x1 < x2 and y1 < y2):
                continue
            bbox = (x1, y1, x2, y2)
            confidence = min(max(float(det["confidence"]), 0.0), 1.0)
            if cfg.use_shape and tools is not None:
                try:
                    mask = tools.segment(png, bbox)
                    path = _outline_path(mask, bbox)
                except ToolUnavailable:
                    path = _bbox_rect_path(bbox)
                    segment_failed = True
            else:
                path = _bbox_rect_path(bbox)
            objects.append(
                {
                    "label": det["label"],
                    "confidence": confidence,
                    "bbox": bbox,
                    "svg_path": path,
                }
            )
        if segment_failed:
            degraded.append("segment")
        objects.sort(key=lambda o: (-o["confidence"], o["label"], o["bbox"]))

    return ToolMetadata(
        image_width=width,
        image_height=height,
        ocr=tuple(regions),
        objects=tuple(objects),
        degraded_tools=tuple(degraded),
    )


# ---------------------------------------------------------------------------
# revision loop


def comment_difference(
    coder: ModelEndpoint,
    original,
    rendered: RenderedImage,
    *,
    log: Optional[PromptLog] = None,
    item_id: Optional[str] = None,
    round_index: Optional[int] = None,
) -> str:
    """Ask the coder what differs between the original image and the render.

    The original image is always the first image part and the render the
    second, matching the prompt's wording. Returns the raw comment text.
    """
    result = templated_chat(
        coder,
        template_id="revision_diff",
        images=[
            (IMAGE_ROLE_ORIGINAL, original),
            (IMAGE_ROLE_RENDER, rendered),
        ],
        log=log,
        item_id=item_id,
        round_index=round_index,
    )
    return result.text


def revise_svg(
    coder: ModelEndpoint,
    original,
    rendered: RenderedImage,
    delta: str,
    code: SvgDocument,
    *,
    round_index: int = 1,
    log: Optional[PromptLog] = None,
    item_id: Optional[str] = None,
) -> SvgDocument:
    """Produce revised code from a difference comment and the current code.

    The revision prompt binds the comment as the optimization goals and the
    current source verbatim; both images accompany it. The reply is
    re-extracted and re-sanitized; origin is ``revision:<round_index>``.
    """
    if not delta.strip():
        raise ValueError("difference comment must be non-empty")
    result = templated_chat(
        coder,
        template_id="revision_fix",
        bindings={
            "optimization_goals": delta,
            "current_svg_code": code.source,
        },
        images=[
            (IMAGE_ROLE_ORIGINAL, original),
            (IMAGE_ROLE_RENDER, rendered),
        ],
        log=log,
        item_id=item_id,
        round_index=round_index,
    )
    return _document_from_reply(result.text, origin=f"revision:{round_index}")


_EXTRACTION_ERRORS = (NoSvgFound, UnbalancedTags, NotRepairable)


def run_vcoder(
    coder: ModelEndpoint,
    item: BenchmarkItem,
    T: int = DEFAULT_REVISION_ROUNDS,
    tools_config: Union[ToolsConfig, Mapping, None] = None,
    *,
    tools=None,
    log: Optional[PromptLog] = None,
    record: Optional[dict] = None,
    max_dim: int = DEFAULT_MAX_DIM,
) -> RevisionTrace:
    """Tool-augmented generation followed by T render-feedback revisions.

    Round 0 generates code from the metadata prompt (system + user with the
    serialized tool metadata). Each subsequent round comments the difference
    between the original image and the current render, revises the code from
    that comment, and renders it. Extraction or render failures freeze the
    trace at the last renderable round; T=0 is the tool-augmented single
    shot. Transport errors from the chat layer propagate.
    """
    if T < 0:
        raise ValueError(f"revision rounds must be >= 0, got {T}")
    metadata = build_tool_metadata(item, tools, tools_config)
    if record is not None and metadata.degraded_tools:
        record["degraded_tools"] = list(metadata.degraded_tools)

    png, width, height = item_image(item)
    reply = templated_chat(
        coder,
        template_id="visual_tools_user",
        bindings={
            "W": str(width),
            "H": str(height),
            "metadata_json": metadata.metadata_json(),
        },
        images=[(IMAGE_ROLE_ORIGINAL, png)],
        system_template_id="visual_tools_system",
        log=log,
        item_id=item.item_id,
        round_index=0,
    )

    def failed(round_index: int, reason: str) -> RevisionTrace:
        return RevisionTrace(
            rounds=tuple(frozen),
            T=T,
            metadata=metadata,
            failure_round=round_index,
            failure=reason,
        )

    frozen: List[RevisionRound] = []
    try:
        code = _document_from_reply(reply.text, origin="initial")
    except _EXTRACTION_ERRORS as exc:
        return failed(0, f"{type(exc).__name__}: {exc}")
    try:
        render = render_svg(code, max_dim=max_dim)
    except RenderFailure as exc:
        return failed(0, f"RenderFailure: {exc}")
    frozen.append(RevisionRound(t=0, code=code, render=render))

    for t in range(T):
        current = frozen[-1]
        delta = comment_difference(
            coder, png, current.render, log=log, item_id=item.item_id, round_index=t
        )
        frozen[-1] = RevisionRound(
            t=current.t, code=current.code, render=current.render, diff_comment=delta
        )
        try:
            revised = revise_svg(
                coder,
                png,
                current.render,
                delta,
                current.code,
                round_index=t + 1,
                log=log,
                item_id=item.item_id,
            )
        except _EXTRACTION_ERRORS as exc:
            return failed(t + 1, f"{type(exc).__name__}: {exc}")
        try:
            new_render = render_svg(revised, max_dim=max_dim)
        except RenderFailure as exc:
            return failed(t + 1, f"RenderFailure: {exc}")
        frozen.append(RevisionRound(t=t + 1, code=revised, render=new_render))

    return RevisionTrace(rounds=tuple(frozen), T=T, metadata=metadata)


# ---------------------------------------------------------------------------
# uniform driver


def run_pipeline(
    pipeline: str,
    coder: ModelEndpoint,
    item: BenchmarkItem,
    *,
    T: int = DEFAULT_REVISION_ROUNDS,
    tools=None,
    tools_config: Union[ToolsConfig, Mapping, None] = None,
    log: Optional[PromptLog] = None,
    record: Optional[dict] = None,
    max_dim: int = DEFAULT_MAX_DIM,
) -> RevisionTrace:
    """Run any pipeline by name and always get a RevisionTrace back.

    Single-shot pipelines produce a one-round trace (T=0 semantics); their
    extraction and render failures are folded into the trace's failure
    fields the same way the revision loop records its own, so the caller
    has one shape to persist and score. Transport errors still propagate.
    """
    if pipeline == "vcoder":
        return run_vcoder(
            coder,
            item,
            T=T,
            tools_config=tools_config,
            tools=tools,
            log=log,
            record=record,
            max_dim=max_dim,
        )

    runners: Mapping[str, Callable] = {
        "img2svg": run_img2svg,
        "img2svg_thinking": run_img2svg_thinking,
        "img2text2svg": run_img2text2svg,
    }
    if pipeline not in runners:
        raise ValueError(
            f"unknown pipeline {pipeline!r}; expected one of {PIPELINE_NAMES}"
        )
    try:
        code = runners[pipeline](coder, item, log=log, record=record)
    except (_EXTRACTION_ERRORS, CaptionEmpty) as exc:  # type: ignore[misc]
        return RevisionTrace(
            rounds=(),
            T=0,
            failure_round=0,
            failure=f"{type(exc).__name__}: {exc}",
        )
    try:
        render = render_svg(code, max_dim=max_dim)
    except RenderFailure as exc:
        return RevisionTrace(
            rounds=(),
            T=0,
            failure_round=0,
            failure=f"RenderFailure: {exc}",
        )
    return RevisionTrace(rounds=(RevisionRound(t=0, code=code, render=render),), T=0)
