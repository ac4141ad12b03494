"""Automatic plant annotation from raw RGB frames.

The pipeline turns an 8-bit RGB image into VOC-style boxes in six pure
steps: scale samples to [0, 1], convert to HSV, threshold the green hue
band, clean the mask with one morphological opening and closing, label
connected components, and emit one tight box per sufficiently large region.

Images are plain numpy arrays: uint8 HxWx3 in, float64 out of normalize,
float64 HxWx3 (hue, saturation, value) out of the color conversion, bool
HxW masks after thresholding. Hue is stored as a fraction of a full turn
in [0, 1). Pixel coordinates follow the package convention x = column,
y = row, origin top-left.

Everything is deterministic: the same bytes and config always produce the
same boxes, so batches can be fanned out across workers freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage

from .boxes import BoundingBox
from .taxonomy import ClassLabel
from .voc import AnnotatedObject, Annotation


class NoRegionsFound(ValueError):
    """No plant region above the size floor; caller decides severity."""


@dataclass(frozen=True)
class MaskConfig:
    """Thresholds and cleanup parameters for green-area detection.

    The hue band and saturation floor are the calibrated plant-matter
    defaults (hue 25/360..160/360 as turn fractions, saturation >= 0.20);
    the band is inclusive on both ends and no value-channel condition is
    applied. min_area_fraction filters out specks relative to the image
    size so the floor adapts to any resolution.
    """

    hue_min: float = 25 / 360
    hue_max: float = 160 / 360
    sat_min: float = 0.20
    morph_kernel: int = 3
    connectivity: Literal[4, 8] = 8
    min_area_fraction: float = 0.0005

    def __post_init__(self) -> None:
        if not (0.0 <= self.hue_min < self.hue_max < 1.0):
            raise ValueError(f"need 0 <= hue_min < hue_max < 1, got {self.hue_min}, {self.hue_max}")
        if not (0.0 <= self.sat_min <= 1.0):
            raise ValueError(f"sat_min must lie in [0, 1], got {self.sat_min}")
        if self.morph_kernel < 1 or self.morph_kernel % 2 == 0:
            raise ValueError(f"morph_kernel must be odd and >= 1, got {self.morph_kernel}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if not (0.0 <= self.min_area_fraction <= 1.0):
            raise ValueError(f"min_area_fraction must lie in [0, 1], got {self.min_area_fraction}")


@dataclass(frozen=True)
class RegionStats:
    """One labeled region: id, member pixel count, tight bounding box."""

    region_id: int
    pixel_count: int
    box: BoundingBox


@dataclass(frozen=True)
class LabeledRegions:
    """Connected-component labeling result.

    labels holds a region id per pixel (0 = background); ids are dense
    1..K in raster-scan order of each region's first pixel.
    """

    labels: np.ndarray
    regions: tuple[RegionStats, ...]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _require_rgb8(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected HxWx3 RGB image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 samples, got {arr.dtype}")
    return arr


def _require_mask(mask: np.ndarray) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.dtype != np.bool_:
        raise ValueError(f"expected a 2-D boolean mask, got {arr.dtype} shape {arr.shape}")
    return arr


def normalize(image: np.ndarray) -> np.ndarray:
    """Scale 8-bit samples to [0, 1] by dividing by 255.0."""
    return _require_rgb8(image).astype(np.float64) / 255.0


def rgb_to_hsv(image: np.ndarray) -> np.ndarray:
    """Hexcone RGB -> HSV on a normalized image.

    Value is max(r, g, b); saturation is 0 for black pixels; hue is a turn
    fraction in [0, 1), 0 for achromatic pixels.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected HxWx3 normalized image, got shape {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("normalized samples must lie in [0, 1]")
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    v = arr.max(axis=2)
    delta = v - arr.min(axis=2)
    s = np.divide(delta, v, out=np.zeros_like(v), where=v > 0)

    chromatic = delta > 0
    safe = np.where(chromatic, delta, 1.0)
    r_max = chromatic & (v == r)
    g_max = chromatic & (v == g) & ~r_max
    b_max = chromatic & ~r_max & ~g_max
    h6 = np.zeros_like(v)
    h6 = np.where(r_max, ((g - b) / safe) % 6.0, h6)
    h6 = np.where(g_max, (b - r) / safe + 2.0, h6)
    h6 = np.where(b_max, (r - g) / safe + 4.0, h6)
    h = h6 / 6.0
    h = np.where(h >= 1.0, 0.0, h)  # guard against % rounding up to 6.0
    return np.stack([h, s, v], axis=2)


def green_mask(hsv: np.ndarray, config: MaskConfig = MaskConfig()) -> np.ndarray:
    """Foreground where hue_min <= h <= hue_max and s >= sat_min."""
    arr = np.asarray(hsv, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected HxWx3 HSV image, got shape {arr.shape}")
    h, s = arr[..., 0], arr[..., 1]
    return (h >= config.hue_min) & (h <= config.hue_max) & (s >= config.sat_min)


def _erode(mask: np.ndarray, kernel: int) -> np.ndarray:
    r = kernel // 2
    if r == 0:
        return mask.copy()
    h, w = mask.shape
    padded = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)  # outside counts as background
    padded[r : r + h, r : r + w] = mask
    out = np.ones_like(mask)
    for di in range(kernel):
        for dj in range(kernel):
            out &= padded[di : di + h, dj : dj + w]
    return out


def _dilate(mask: np.ndarray, kernel: int) -> np.ndarray:
    r = kernel // 2
    if r == 0:
        return mask.copy()
    h, w = mask.shape
    padded = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
    padded[r : r + h, r : r + w] = mask
    out = np.zeros_like(mask)
    for di in range(kernel):
        for dj in range(kernel):
            out |= padded[di : di + h, dj : dj + w]
    return out


def morph_refine(mask: np.ndarray, config: MaskConfig = MaskConfig()) -> np.ndarray:
    """One opening then one closing with a square structuring element.

    Opening removes speckle noise, closing restores continuity inside
    plant areas; pixels beyond the image border count as background.
    """
    m = _require_mask(mask)
    k = config.morph_kernel
    opened = _dilate(_erode(m, k), k)
    return _erode(_dilate(opened, k), k)


_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCTURE_8 = np.ones((3, 3), dtype=bool)


def connected_components(mask: np.ndarray, connectivity: Literal[4, 8] = 8) -> LabeledRegions:
    """Label maximal connected foreground regions of a binary mask.

    Region ids are renumbered into raster-scan first-touch order so the
    labeling is reproducible regardless of the backend's internal order.
    """
    m = _require_mask(mask)
    if connectivity == 4:
        structure = _STRUCTURE_4
    elif connectivity == 8:
        structure = _STRUCTURE_8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    raw, count = ndimage.label(m, structure=structure)
    if count == 0:
        return LabeledRegions(labels=raw.astype(np.int32), regions=())

    flat = raw.ravel()
    values, first_index = np.unique(flat, return_index=True)
    nonzero = values != 0
    values, first_index = values[nonzero], first_index[nonzero]
    remap = np.zeros(count + 1, dtype=np.int32)
    for new_id, slot in enumerate(np.argsort(first_index, kind="stable"), start=1):
        remap[values[slot]] = new_id
    labels = remap[raw]

    counts = np.bincount(labels.ravel(), minlength=count + 1)
    regions = []
    for region_id, slices in enumerate(ndimage.find_objects(labels), start=1):
        row_slice, col_slice = slices
        regions.append(
            RegionStats(
                region_id=region_id,
                pixel_count=int(counts[region_id]),
                box=BoundingBox(
                    xmin=int(col_slice.start),
                    ymin=int(row_slice.start),
                    xmax=int(col_slice.stop - 1),
                    ymax=int(row_slice.stop - 1),
                ),
            )
        )
    return LabeledRegions(labels=labels, regions=tuple(regions))


def regions_to_boxes(regions: LabeledRegions, config: MaskConfig = MaskConfig()) -> list[BoundingBox]:
    """Boxes of all regions above the size floor, largest region first.

    The floor is min_area_fraction of the image pixel count; ties in
    region size keep region-id order.
    """
    floor = config.min_area_fraction * regions.width * regions.height
    kept = [r for r in regions.regions if r.pixel_count >= floor]
    kept.sort(key=lambda r: (-r.pixel_count, r.region_id))
    return [r.box for r in kept]


def auto_annotate(
    image: np.ndarray,
    label: ClassLabel,
    config: MaskConfig = MaskConfig(),
    image_id: str = "",
) -> Annotation:
    """Run the full pipeline on one RGB frame and tag every box with label.

    Raises NoRegionsFound when no region clears the size floor (all-soil
    frames, failed germination, etc.).
    """
    arr = _require_rgb8(image)
    height, width = arr.shape[:2]
    mask = green_mask(rgb_to_hsv(normalize(arr)), config)
    refined = morph_refine(mask, config)
    regions = connected_components(refined, config.connectivity)
    boxes = regions_to_boxes(regions, config)
    if not boxes:
        raise NoRegionsFound(f"no green region above {config.min_area_fraction:g} of image area")
    objects = tuple(AnnotatedObject(label=label, box=box) for box in boxes)
    return Annotation(image_id=image_id, width=width, height=height, depth=3, objects=objects)
