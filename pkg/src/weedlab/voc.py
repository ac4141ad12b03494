"""Pascal VOC XML annotations.

In memory, box coordinates are 0-based inclusive pixel indices. VOC files
store the same boxes 1-based (also inclusive), so the writer adds 1 to
every coordinate and the reader subtracts it; that offset exists nowhere
else in the package.

Serialization is byte-deterministic: fixed element order (folder, filename,
size, objects in list order), two-space indentation, no timestamps.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from .boxes import BoundingBox
from .taxonomy import ClassLabel, Taxonomy, TaxonomyError, parse_label

# Extensions recognized when pairing annotations with image files and when
# stripping a <filename> suffix back to an image id.
IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".bmp")


class MalformedXml(ValueError):
    """Input is not a well-formed VOC annotation document."""


class UnknownLabel(ValueError):
    """Object name does not parse against the taxonomy."""


class BoxOutOfBounds(ValueError):
    """Box coordinates are inverted or fall outside the image."""


@dataclass(frozen=True)
class AnnotatedObject:
    label: ClassLabel
    box: BoundingBox
    pose: str = "Unspecified"
    truncated: int = 0
    difficult: int = 0


@dataclass(frozen=True)
class Annotation:
    """Ground-truth boxes for one image, keyed by the image file stem."""

    image_id: str
    width: int
    height: int
    depth: int = 3
    objects: tuple[AnnotatedObject, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad image size {self.width}x{self.height}")
        for obj in self.objects:
            b = obj.box
            if b.xmax > self.width - 1 or b.ymax > self.height - 1:
                raise BoxOutOfBounds(
                    f"box {b} exceeds image bounds {self.width}x{self.height}"
                )


def write_voc_xml(annotation: Annotation, folder: str = "images") -> bytes:
    """Serialize an annotation to VOC XML (1-based box coordinates)."""
    lines = [
        "<annotation>",
        f"  <folder>{escape(folder)}</folder>",
        f"  <filename>{escape(annotation.image_id)}</filename>",
        "  <size>",
        f"    <width>{annotation.width}</width>",
        f"    <height>{annotation.height}</height>",
        f"    <depth>{annotation.depth}</depth>",
        "  </size>",
    ]
    for obj in annotation.objects:
        lines += [
            "  <object>",
            f"    <name>{escape(obj.label.canonical)}</name>",
            f"    <pose>{escape(obj.pose)}</pose>",
            f"    <truncated>{obj.truncated}</truncated>",
            f"    <difficult>{obj.difficult}</difficult>",
            "    <bndbox>",
            f"      <xmin>{obj.box.xmin + 1}</xmin>",
            f"      <ymin>{obj.box.ymin + 1}</ymin>",
            f"      <xmax>{obj.box.xmax + 1}</xmax>",
            f"      <ymax>{obj.box.ymax + 1}</ymax>",
            "    </bndbox>",
            "  </object>",
        ]
    lines.append("</annotation>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _text_of(parent: ET.Element, tag: str, default: str | None = None) -> str:
    node = parent.find(tag)
    if node is None or node.text is None:
        if default is not None:
            return default
        raise MalformedXml(f"missing <{tag}> element")
    return node.text.strip()


def _int_of(parent: ET.Element, tag: str, default: str | None = None) -> int:
    text = _text_of(parent, tag, default)
    try:
        value = float(text)
    except ValueError:
        raise MalformedXml(f"<{tag}> is not a number: {text!r}") from None
    if value != int(value):
        raise MalformedXml(f"<{tag}> is not an integer: {text!r}")
    return int(value)


def strip_image_extension(filename: str) -> str:
    lower = filename.lower()
    for ext in IMAGE_EXTENSIONS:
        if lower.endswith(ext):
            return filename[: -len(ext)]
    return filename


def read_voc_xml(data: bytes | str, taxonomy: Taxonomy) -> Annotation:
    """Parse VOC XML bytes, the inverse of write_voc_xml.

    Missing pose/truncated/difficult fields default to "Unspecified"/0/0;
    a <filename> with an image extension is stripped to the bare stem.
    Raises MalformedXml, UnknownLabel or BoxOutOfBounds.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedXml(f"not well-formed XML: {exc}") from exc
    if root.tag != "annotation":
        raise MalformedXml(f"root element is <{root.tag}>, expected <annotation>")

    image_id = strip_image_extension(_text_of(root, "filename"))
    size = root.find("size")
    if size is None:
        raise MalformedXml("missing <size> element")
    width = _int_of(size, "width")
    height = _int_of(size, "height")
    depth = _int_of(size, "depth", default="3")

    objects = []
    for obj in root.findall("object"):
        name = _text_of(obj, "name")
        try:
            label = parse_label(name, taxonomy)
        except TaxonomyError as exc:
            raise UnknownLabel(f"object name {name!r}: {exc}") from exc
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise MalformedXml(f"object {name!r} has no <bndbox>")
        coords = {tag: _int_of(bndbox, tag) - 1 for tag in ("xmin", "ymin", "xmax", "ymax")}
        try:
            box = BoundingBox(**coords)
        except ValueError as exc:
            raise BoxOutOfBounds(str(exc)) from exc
        objects.append(
            AnnotatedObject(
                label=label,
                box=box,
                pose=_text_of(obj, "pose", default="Unspecified"),
                truncated=_int_of(obj, "truncated", default="0"),
                difficult=_int_of(obj, "difficult", default="0"),
            )
        )
    return Annotation(image_id=image_id, width=width, height=height, depth=depth, objects=tuple(objects))
