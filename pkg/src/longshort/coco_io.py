"""COCO-format annotation ingestion and export.

Synthetic scenes export to the same images/annotations/categories schema
that real datasets ship, so both feed one evaluation path.  Ingestion orders
images by id to obtain frame indices, converts (x, y, w, h) boxes to corner
form, and ignores unknown fields.  Exports additionally carry an exact
corner quadruple per annotation ("bbox_corners") which ingestion prefers
when present, keeping scene round-trips bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .boxes import BBox, GroundTruthBox
from .network import Frame
from .scenarios import SyntheticScene


class ParseError(ValueError):
    """Annotation file is malformed; the message carries the context."""


class MissingField(ParseError):
    """A required field is absent."""


@dataclass(frozen=True)
class CocoImage:
    id: int
    width: int
    height: int
    file_name: str


@dataclass(frozen=True)
class CocoDataset:
    images: tuple[CocoImage, ...]
    gts_by_frame: tuple[tuple[GroundTruthBox, ...], ...]
    categories: dict[int, str]
    frame_interval_ms: Optional[float] = None


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise MissingField(f"missing field {key!r} in {where}")
    return obj[key]


def load_coco_annotations(path: Union[str, Path]) -> CocoDataset:
    """Read a COCO-style annotation file into frames and ground truth."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")

    images_raw = _need(data, "images", str(path))
    anns_raw = _need(data, "annotations", str(path))

    images = []
    for i, img in enumerate(images_raw):
        where = f"images[{i}]"
        images.append(
            CocoImage(
                id=int(_need(img, "id", where)),
                width=int(_need(img, "width", where)),
                height=int(_need(img, "height", where)),
                file_name=str(img.get("file_name", "")),
            )
        )
    images.sort(key=lambda im: im.id)
    frame_of_image = {im.id: k for k, im in enumerate(images)}
    if len(frame_of_image) != len(images):
        raise ParseError(f"{path}: duplicate image ids")

    gts: list[list[GroundTruthBox]] = [[] for _ in images]
    for i, ann in enumerate(anns_raw):
        where = f"annotations[{i}]"
        image_id = int(_need(ann, "image_id", where))
        if image_id not in frame_of_image:
            raise ParseError(f"{path}: {where}: unknown image_id {image_id}")
        category = int(_need(ann, "category_id", where))
        if "bbox_corners" in ann:
            x0, y0, x1, y1 = (float(v) for v in ann["bbox_corners"])
        else:
            x, y, w, h = (float(v) for v in _need(ann, "bbox", where))
            x0, y0, x1, y1 = x, y, x + w, y + h
        try:
            box = BBox(x0, y0, x1, y1)
        except ValueError as exc:
            raise ParseError(f"{path}: {where}: {exc}") from exc
        frame_index = frame_of_image[image_id]
        track_id = int(ann.get("track_id", ann.get("id", i)))
        gts[frame_index].append(
            GroundTruthBox(bbox=box, category=category, track_id=track_id, frame_index=frame_index)
        )

    categories = {}
    for j, cat in enumerate(data.get("categories", [])):
        cid = int(_need(cat, "id", f"categories[{j}]"))
        categories[cid] = str(cat.get("name", f"category_{cid}"))

    info = data.get("info", {})
    interval = info.get("frame_interval_ms") if isinstance(info, dict) else None
    return CocoDataset(
        images=tuple(images),
        gts_by_frame=tuple(tuple(g) for g in gts),
        categories=categories,
        frame_interval_ms=interval,
    )


def scenario_to_coco(
    scenario: Sequence[tuple[Frame, list[GroundTruthBox]]],
    scene: SyntheticScene,
) -> dict:
    """Build the COCO-style dict for a generated scene."""
    images = []
    annotations = []
    used_categories = set()
    ann_id = 0
    for frame, gts in scenario:
        images.append(
            {
                "id": frame.index,
                "width": scene.width,
                "height": scene.height,
                "file_name": f"frame_{frame.index:06d}.raw",
            }
        )
        for g in gts:
            used_categories.add(g.category)
            b = g.bbox
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": frame.index,
                    "category_id": g.category,
                    "bbox": [b.x_min, b.y_min, b.width, b.height],
                    "bbox_corners": [b.x_min, b.y_min, b.x_max, b.y_max],
                    "area": g.area,
                    "track_id": g.track_id,
                    "iscrowd": 0,
                }
            )
            ann_id += 1
    return {
        "info": {"frame_interval_ms": scene.frame_interval_ms},
        "images": images,
        "annotations": annotations,
        "categories": [{"id": c, "name": f"category_{c}"} for c in sorted(used_categories)],
    }


def export_scenario(
    scenario: Sequence[tuple[Frame, list[GroundTruthBox]]],
    scene: SyntheticScene,
    path: Union[str, Path],
) -> None:
    Path(path).write_text(json.dumps(scenario_to_coco(scenario, scene), indent=2) + "\n")
