"""Pixel operations behind the Source and Collection views.

A GrayRaster is a plain 8-bit luminance grid (0 = black ink). Page images
are decoded lazily through a bounded LRU cache; color scans are reduced to
luminance with BT.601 weights rounded to the nearest integer.
"""

from __future__ import annotations

from collections import Counter, OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (ConstantImage, EmptyIntersection, MissingImage,
                     UnknownId)
from .model import BBox, IndexedDataset


@dataclass(frozen=True)
class GrayRaster:
    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be a 2-D uint8 array")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @staticmethod
    def from_list(width: int, height: int, values) -> "GrayRaster":
        arr = np.asarray(values, dtype=np.uint8).reshape(height, width)
        return GrayRaster(arr)


def to_luminance(rgb: np.ndarray) -> GrayRaster:
    """ITU-R BT.601 luma, rounded to nearest integer."""
    if rgb.ndim == 2:
        return GrayRaster(rgb.astype(np.uint8))
    y = (0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2])
    return GrayRaster(np.floor(y + 0.5).clip(0, 255).astype(np.uint8))


def crop_segment(page: GrayRaster, bbox: BBox) -> GrayRaster:
    """Crop the intersection of bbox and the page; a bbox reaching past the
    page edge is clipped, one fully outside raises EmptyIntersection."""
    x0 = max(0, bbox.x)
    y0 = max(0, bbox.y)
    x1 = min(page.width, bbox.x + bbox.w)
    y1 = min(page.height, bbox.y + bbox.h)
    if x0 >= x1 or y0 >= y1:
        raise EmptyIntersection(
            f"bbox ({bbox.x},{bbox.y},{bbox.w},{bbox.h}) does not intersect "
            f"{page.width}x{page.height} page")
    return GrayRaster(page.pixels[y0:y1, x0:x1].copy())


def otsu_threshold(img: GrayRaster) -> int:
    """Threshold maximizing between-class variance over the 256-bin
    histogram, classes {p <= t} and {p > t}; ties resolve to the smallest t."""
    hist = np.bincount(img.pixels.ravel(), minlength=256).astype(float)
    if np.count_nonzero(hist) < 2:
        raise ConstantImage("image has a single pixel value")
    total = hist.sum()
    levels = np.arange(256, dtype=float)
    cum_n = np.cumsum(hist)
    cum_sum = np.cumsum(hist * levels)
    grand = cum_sum[-1]
    best_t, best_var = 0, -1.0
    for t in range(256):
        n0 = cum_n[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        mu0 = cum_sum[t] / n0
        mu1 = (grand - cum_sum[t]) / n1
        var = (n0 / total) * (n1 / total) * (mu0 - mu1) ** 2
        if var > best_var:
            best_var, best_t = var, t
    return best_t


def binarize(img: GrayRaster, t: int) -> GrayRaster:
    """p <= t becomes ink (0), everything else background (255)."""
    return GrayRaster(np.where(img.pixels <= t, 0, 255).astype(np.uint8))


def resize_nearest(img: GrayRaster, width: int, height: int) -> GrayRaster:
    """Nearest-neighbor resize; preserves hard strokes and is trivially
    reproducible across implementations."""
    ys = (np.arange(height) * img.height // height).clip(0, img.height - 1)
    xs = (np.arange(width) * img.width // width).clip(0, img.width - 1)
    return GrayRaster(img.pixels[np.ix_(ys, xs)])


class ImageStore:
    """Read-through LRU cache of decoded page rasters keyed by spread id."""

    def __init__(self, ds: IndexedDataset, images_dir: str | Path | None = None,
                 capacity: int = 16):
        self.ds = ds
        self.images_dir = Path(images_dir) if images_dir else None
        self.capacity = capacity
        self._cache: OrderedDict[int, GrayRaster] = OrderedDict()

    def put(self, spread_id: int, raster: GrayRaster) -> None:
        self._cache[spread_id] = raster
        self._cache.move_to_end(spread_id)
        while len(self._cache) > self.capacity:
            self._cache.popitem(last=False)

    def has(self, spread_id: int) -> bool:
        if spread_id in self._cache:
            return True
        return self._resolve_path(spread_id) is not None

    def _resolve_path(self, spread_id: int) -> Path | None:
        sp = self.ds.spread_by_id.get(spread_id)
        if sp is None or sp.image_ref is None:
            return None
        path = Path(sp.image_ref)
        if not path.is_absolute() and self.images_dir is not None:
            path = self.images_dir / path
        return path if path.exists() else None

    def page(self, spread_id: int) -> GrayRaster:
        if spread_id in self._cache:
            self._cache.move_to_end(spread_id)
            return self._cache[spread_id]
        path = self._resolve_path(spread_id)
        if path is None:
            raise MissingImage(f"no page image for spread {spread_id}",
                               entity=f"spread:{spread_id}")
        from PIL import Image

        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB") if im.mode not in ("L", "I;16")
                             else im)
        raster = to_luminance(arr)
        self.put(spread_id, raster)
        return raster


def _modal_size(sizes: list[tuple[int, int]]) -> tuple[int, int]:
    counts = Counter(sizes)
    best = max(counts.values())
    return min(s for s, c in counts.items() if c == best)


def segment_raster(segment_id: int, ds: IndexedDataset,
                   images: ImageStore) -> GrayRaster:
    seg = ds.segment(segment_id)
    return crop_segment(images.page(seg.spread_id), seg.bbox)


def representative_segment(block_id: int, ds: IndexedDataset,
                           images: ImageStore | None = None) -> int:
    """Pick the block's canonical member.

    With images: the medoid under mean absolute pixel difference after
    nearest-neighbor resize to the block's modal bbox size (ties break to
    the smallest id). Without images: the first member in reading order.
    """
    blk = ds.block(block_id)
    members = blk.member_ids
    if images is None or len(members) == 1:
        return members[0]
    if not all(images.has(ds.segment(s).spread_id) for s in members):
        return members[0]
    w, h = _modal_size([(ds.segment(s).bbox.w, ds.segment(s).bbox.h)
                        for s in members])
    rasters = {s: resize_nearest(segment_raster(s, ds, images), w, h).pixels
                  .astype(float)
               for s in members}
    best_id, best_score = None, None
    for sid in sorted(members):
        score = sum(float(np.abs(rasters[sid] - rasters[o]).mean())
                    for o in members if o != sid)
        if best_score is None or score < best_score:
            best_id, best_score = sid, score
    return best_id


def block_thumbnail(block_id: int, ds: IndexedDataset,
                    images: ImageStore) -> GrayRaster:
    """Canonical visual form of a block: representative segment, thresholded
    to keep only the ink imprint."""
    rep = representative_segment(block_id, ds, images)
    seg = ds.segment(rep)
    if not images.has(seg.spread_id):
        raise MissingImage(f"no page image for spread {seg.spread_id}",
                           entity=f"spread:{seg.spread_id}")
    crop = crop_segment(images.page(seg.spread_id), seg.bbox)
    try:
        t = otsu_threshold(crop)
    except ConstantImage:
        t = 127
    return binarize(crop, t)
