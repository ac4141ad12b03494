"""HTTP API for human review of VOC annotations.

The dataset directory itself is the store: GETs read the XML files, PUTs
rewrite them atomically, and review flags plus revision counters live in
one sidecar manifest (review-manifest.json), so every other tool keeps
seeing the corrected boxes. Writes use optimistic concurrency: a PUT must
carry the revision it based its edits on and is rejected with 409 when
stale. The wire format uses 0-based inclusive pixel coordinates; the VOC
+1 offset never crosses the API.

Endpoints (JSON unless noted):

* GET  /api/taxonomy                   -> {species: [{code, common_name, weeks}]}
* GET  /api/images?offset=&limit=      -> {total, offset, limit, items: [{image_id, reviewed, box_count}]}
* GET  /api/images/{id}                -> image bytes
* GET  /api/annotations/{id}           -> record (see RecordModel)
* PUT  /api/annotations/{id}           -> record; body {expected_revision, boxes}
* POST /api/annotations/{id}/reviewed  -> record; body {reviewed}

Error bodies carry {"detail": {"error": <code>, ...}} with codes
not_found, revision_conflict, validation_failed.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .boxes import BoundingBox
from .fsio import atomic_write_text, atomic_write_bytes
from .taxonomy import Taxonomy, TaxonomyError, parse_label
from .voc import AnnotatedObject, Annotation, read_voc_xml, write_voc_xml

MANIFEST_NAME = "review-manifest.json"

_CONTENT_TYPES = {
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".png": "image/png",
    ".bmp": "image/bmp",
}


class UnknownImage(KeyError):
    pass


class StaleRevision(Exception):
    def __init__(self, current: int):
        super().__init__(f"expected revision is stale; current is {current}")
        self.current = current


class InvalidBoxes(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class BoxModel(BaseModel):
    label: str
    xmin: int
    ymin: int
    xmax: int
    ymax: int


class RecordModel(BaseModel):
    image_id: str
    width: int
    height: int
    boxes: list[BoxModel]
    reviewed: bool
    revision: int


class PutRequest(BaseModel):
    expected_revision: int
    boxes: list[BoxModel]


class ReviewedRequest(BaseModel):
    reviewed: bool


class ImageListItem(BaseModel):
    image_id: str
    reviewed: bool
    box_count: int


class ImageListResponse(BaseModel):
    total: int
    offset: int
    limit: int
    items: list[ImageListItem]


class ReviewStore:
    """Filesystem-backed store with per-image write serialization."""

    def __init__(self, root: str | Path, taxonomy: Taxonomy):
        self.root = Path(root)
        self.taxonomy = taxonomy
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._manifest_lock = threading.Lock()
        self._meta: dict[str, dict] = {}
        manifest = self.root / MANIFEST_NAME
        if manifest.exists():
            self._meta = json.loads(manifest.read_text(encoding="utf-8")).get("records", {})

    # -- paths and metadata

    def image_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.xml"))

    def _xml_path(self, image_id: str) -> Path:
        path = self.root / f"{image_id}.xml"
        if not path.exists() or "/" in image_id or "\\" in image_id or image_id.startswith("."):
            raise UnknownImage(image_id)
        return path

    def _image_path(self, image_id: str) -> Path:
        self._xml_path(image_id)  # also guards against path tricks
        for ext in _CONTENT_TYPES:
            for candidate in (self.root / f"{image_id}{ext}", self.root / f"{image_id}{ext.upper()}"):
                if candidate.exists():
                    return candidate
        raise UnknownImage(image_id)

    def _lock_for(self, image_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(image_id, threading.Lock())

    def meta(self, image_id: str) -> dict:
        entry = self._meta.get(image_id, {})
        return {"reviewed": bool(entry.get("reviewed", False)), "revision": int(entry.get("revision", 0))}

    def _persist_meta(self) -> None:
        with self._manifest_lock:
            payload = {"records": {k: self._meta[k] for k in sorted(self._meta)}}
            atomic_write_text(self.root / MANIFEST_NAME, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    # -- records

    def _read_annotation(self, image_id: str) -> Annotation:
        return read_voc_xml(self._xml_path(image_id).read_bytes(), self.taxonomy)

    def get_record(self, image_id: str) -> dict:
        ann = self._read_annotation(image_id)
        meta = self.meta(image_id)
        return {
            "image_id": image_id,
            "width": ann.width,
            "height": ann.height,
            "boxes": [
                {
                    "label": obj.label.canonical,
                    "xmin": obj.box.xmin,
                    "ymin": obj.box.ymin,
                    "xmax": obj.box.xmax,
                    "ymax": obj.box.ymax,
                }
                for obj in ann.objects
            ],
            "reviewed": meta["reviewed"],
            "revision": meta["revision"],
        }

    def _validated_objects(self, boxes: list[BoxModel], width: int, height: int) -> tuple[AnnotatedObject, ...]:
        problems: list[str] = []
        objects: list[AnnotatedObject] = []
        for i, box in enumerate(boxes):
            try:
                label = parse_label(box.label, self.taxonomy)
            except TaxonomyError as exc:
                problems.append(f"box {i}: {exc}")
                continue
            if not (0 <= box.xmin <= box.xmax <= width - 1) or not (0 <= box.ymin <= box.ymax <= height - 1):
                problems.append(
                    f"box {i}: ({box.xmin},{box.ymin},{box.xmax},{box.ymax}) outside {width}x{height}"
                )
                continue
            objects.append(AnnotatedObject(label=label, box=BoundingBox(box.xmin, box.ymin, box.xmax, box.ymax)))
        if problems:
            raise InvalidBoxes(problems)
        return tuple(objects)

    def put_record(self, image_id: str, boxes: list[BoxModel], expected_revision: int) -> dict:
        with self._lock_for(image_id):
            ann = self._read_annotation(image_id)
            meta = self.meta(image_id)
            if expected_revision != meta["revision"]:
                raise StaleRevision(meta["revision"])
            objects = self._validated_objects(boxes, ann.width, ann.height)
            updated = Annotation(
                image_id=image_id,
                width=ann.width,
                height=ann.height,
                depth=ann.depth,
                objects=objects,
            )
            atomic_write_bytes(self._xml_path(image_id), write_voc_xml(updated))
            self._meta[image_id] = {"reviewed": meta["reviewed"], "revision": meta["revision"] + 1}
            self._persist_meta()
        return self.get_record(image_id)

    def set_reviewed(self, image_id: str, flag: bool) -> dict:
        with self._lock_for(image_id):
            self._xml_path(image_id)  # existence check
            meta = self.meta(image_id)
            self._meta[image_id] = {"reviewed": bool(flag), "revision": meta["revision"]}
            self._persist_meta()
        return self.get_record(image_id)

    def image_payload(self, image_id: str) -> tuple[bytes, str]:
        path = self._image_path(image_id)
        return path.read_bytes(), _CONTENT_TYPES[path.suffix.lower()]


def _not_found(image_id: str) -> HTTPException:
    return HTTPException(status_code=404, detail={"error": "not_found", "image_id": image_id})


def create_app(
    root: str | Path,
    taxonomy: Taxonomy,
    ui_dir: str | Path | None = None,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    """Build the review app over a dataset directory."""
    store = ReviewStore(root, taxonomy)
    app = FastAPI(title="weedlab review service", docs_url=None, redoc_url=None)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins if cors_origins is not None else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/taxonomy")
    def get_taxonomy() -> dict:
        return {
            "species": [
                {
                    "code": s.code,
                    "common_name": s.common_name,
                    "weeks": sorted(s.active_weeks),
                }
                for s in taxonomy.species_list
            ]
        }

    @app.get("/api/images", response_model=ImageListResponse)
    def list_images(offset: int = 0, limit: int = 50) -> ImageListResponse:
        offset = max(0, offset)
        limit = max(0, min(limit, 500))
        ids = store.image_ids()
        items = []
        for image_id in ids[offset : offset + limit]:
            record = store.get_record(image_id)
            items.append(
                ImageListItem(
                    image_id=image_id,
                    reviewed=record["reviewed"],
                    box_count=len(record["boxes"]),
                )
            )
        return ImageListResponse(total=len(ids), offset=offset, limit=limit, items=items)

    @app.api_route("/api/images/{image_id}", methods=["GET", "HEAD"])
    def get_image(image_id: str) -> Response:
        try:
            payload, content_type = store.image_payload(image_id)
        except UnknownImage:
            raise _not_found(image_id)
        return Response(content=payload, media_type=content_type)

    @app.get("/api/annotations/{image_id}", response_model=RecordModel)
    def get_annotation(image_id: str):
        try:
            return store.get_record(image_id)
        except UnknownImage:
            raise _not_found(image_id)

    @app.put("/api/annotations/{image_id}", response_model=RecordModel)
    def put_annotation(image_id: str, request: PutRequest):
        try:
            return store.put_record(image_id, request.boxes, request.expected_revision)
        except UnknownImage:
            raise _not_found(image_id)
        except StaleRevision as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": "revision_conflict", "current_revision": exc.current},
            )
        except InvalidBoxes as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": "validation_failed", "problems": exc.problems},
            )

    @app.post("/api/annotations/{image_id}/reviewed", response_model=RecordModel)
    def set_reviewed(image_id: str, request: ReviewedRequest):
        try:
            return store.set_reviewed(image_id, request.reviewed)
        except UnknownImage:
            raise _not_found(image_id)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
