"""Client for the vision tool server (object detection, segmentation, OCR).

The wire format is JSON over HTTP with base64-PNG images. Responses carry
the tool payload at the top level (``objects`` / ``mask`` / ``regions``)
alongside provenance keys such as ``model_id`` and ``latency_ms``; the
client also accepts the payload nested under a ``payload`` key. Any
transport or server failure surfaces as :class:`ToolUnavailable` naming the
tool, which callers degrade on rather than abort.

:class:`ScriptedToolClient` is the in-process stand-in used for hermetic
runs and tests: fixed or callable responses per tool, with scriptable
failures.
"""

import base64
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import httpx
import numpy as np

from .geometry import decode_rle

BBox = Tuple[float, float, float, float]


class ToolUnavailable(Exception):
    """A vision tool could not produce a result."""

    def __init__(self, tool_name: str, detail: str = ""):
        self.tool_name = tool_name
        self.detail = detail
        msg = f"tool {tool_name!r} unavailable"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


def _payload(body: dict, key: str):
    if key in body:
        return body[key]
    nested = body.get("payload")
    if isinstance(nested, dict) and key in nested:
        return nested[key]
    raise KeyError(key)


class ToolClient:
    """HTTP client speaking the tool-server wire contract."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _post(self, tool: str, body: dict) -> dict:
        url = f"{self.base_url}/{tool}"
        try:
            response = httpx.post(url, json=body, timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise ToolUnavailable(tool, str(exc)) from exc
        if response.status_code != 200:
            raise ToolUnavailable(tool, f"HTTP {response.status_code}")
        try:
            return response.json()
        except ValueError as exc:
            raise ToolUnavailable(tool, "response is not JSON") from exc

    @staticmethod
    def _image_body(png: bytes) -> dict:
        return {"image": base64.b64encode(png).decode("ascii")}

    def detect(self, png: bytes) -> List[dict]:
        """Detected objects: [{label, confidence, bbox: [x1, y1, x2, y2]}]."""
        body = self._post("detect", self._image_body(png))
        try:
            objects = _payload(body, "objects")
            return [
                {
                    "label": str(obj["label"]),
                    "confidence": float(obj["confidence"]),
                    "bbox": tuple(float(v) for v in obj["bbox"]),
                }
                for obj in objects
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ToolUnavailable("detect", f"malformed response: {exc}") from exc

    def segment(self, png: bytes, bbox: BBox) -> np.ndarray:
        """Boolean foreground mask for the box prompt, at image dimensions."""
        body = self._post(
            "segment", {**self._image_body(png), "bbox": [float(v) for v in bbox]}
        )
        try:
            rle = _payload(body, "mask")
            return decode_rle(rle["size"], rle["counts"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ToolUnavailable("segment", f"malformed response: {exc}") from exc

    def ocr(self, png: bytes) -> List[dict]:
        """Text regions: [{text, quad: [[x, y] x4]}] in reading order."""
        body = self._post("ocr", self._image_body(png))
        try:
            regions = _payload(body, "regions")
            return [
                {
                    "text": str(region["text"]),
                    "quad": [
                        (float(x), float(y)) for x, y in region["quad"]
                    ],
                }
                for region in regions
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ToolUnavailable("ocr", f"malformed response: {exc}") from exc


class ScriptedToolClient:
    """In-process tool client with fixed or computed responses.

    ``detections`` / ``regions`` may be lists or callables of the PNG bytes;
    ``masks`` may be an array or a callable of (png, bbox). Tools named in
    ``fail`` raise :class:`ToolUnavailable` on use.
    """

    def __init__(
        self,
        detections: Union[Sequence[dict], Callable[[bytes], List[dict]]] = (),
        masks: Optional[Union[np.ndarray, Callable[[bytes, BBox], np.ndarray]]] = None,
        regions: Union[Sequence[dict], Callable[[bytes], List[dict]]] = (),
        fail: Iterable[str] = (),
    ):
        self._detections = detections
        self._masks = masks
        self._regions = regions
        self._fail = frozenset(fail)
        self.calls: List[Tuple[str, tuple]] = []

    def _check(self, tool: str) -> None:
        if tool in self._fail:
            raise ToolUnavailable(tool, "scripted failure")

    def detect(self, png: bytes) -> List[dict]:
        self._check("detect")
        self.calls.append(("detect", ()))
        if callable(self._detections):
            return self._detections(png)
        return [dict(obj) for obj in self._detections]

    def segment(self, png: bytes, bbox: BBox) -> np.ndarray:
        self._check("segment")
        self.calls.append(("segment", (tuple(bbox),)))
        if self._masks is None:
            raise ToolUnavailable("segment", "no mask scripted")
        if callable(self._masks):
            return self._masks(png, bbox)
        return np.asarray(self._masks, dtype=bool)

    def ocr(self, png: bytes) -> List[dict]:
        self._check("ocr")
        self.calls.append(("ocr", ()))
        if callable(self._regions):
            return self._regions(png)
        return [dict(region) for region in self._regions]
