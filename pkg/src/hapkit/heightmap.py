"""Height-map loading, detrending, region handling and patch extraction.

A height map is a calibrated 2-D field of surface heights (raw 16-bit
counts from an optical profilometer, row-major, y down).  Regions are
rectangles or simple polygons in pixel coordinates; each region is cut
into a grid of square patches which are octagon-masked and rotated so the
downstream classifier cannot key on patch corners or a fixed orientation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage, signal

_ACCEPTED_16BIT_MODES = {"I;16", "I;16B", "I;16L", "I;16N"}

#: Number of distinct patch orientations (45 degree steps).
N_ORIENTATIONS = 8


@dataclass(frozen=True)
class HeightMap:
    """Calibrated surface height field.

    ``values`` holds raw height counts as float64, shape (height_px,
    width_px).  ``lateral_resolution`` is micrometers per pixel;
    ``height_scale_nm`` converts one count to nanometers when known.
    """

    values: np.ndarray
    lateral_resolution: float
    source_id: str
    height_scale_nm: float | None = None

    def __post_init__(self):
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ValueError("height map must be a non-empty 2-D array")
        if not self.lateral_resolution > 0:
            raise ValueError("lateral_resolution must be positive")

    @property
    def width_px(self) -> int:
        return self.values.shape[1]

    @property
    def height_px(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RegionSpec:
    """A named area of one painting: axis-aligned rect or simple polygon.

    ``rect`` is (x, y, w, h) in pixels; ``polygon`` a list of (x, y)
    vertices.  Exactly one of the two is set.
    """

    region_id: str
    painting_id: str
    rect: tuple[float, float, float, float] | None = None
    polygon: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if (self.rect is None) == (self.polygon is None):
            raise ValueError(f"region {self.region_id}: need exactly one of rect/polygon")
        if self.rect is not None and (self.rect[2] <= 0 or self.rect[3] <= 0):
            raise ValueError(f"region {self.region_id}: rect must have positive size")
        if self.polygon is not None and len(self.polygon) < 3:
            raise ValueError(f"region {self.region_id}: polygon needs >= 3 vertices")

    def bounds(self) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y) of the boundary."""
        if self.rect is not None:
            x, y, w, h = self.rect
            return x, y, x + w, y + h
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        return min(xs), min(ys), max(xs), max(ys)

    def area_cm2(self, lateral_resolution_um: float) -> float:
        px_cm = lateral_resolution_um * 1e-4
        if self.rect is not None:
            return self.rect[2] * self.rect[3] * px_cm**2
        from shapely.geometry import Polygon

        return Polygon(self.polygon).area * px_cm**2


@dataclass(frozen=True)
class Patch:
    """Octagon-masked, standardized, oriented square patch.

    ``pixels`` has zero mean and unit variance over the mask support and
    the fill value 0 outside it.  ``source`` keeps the raw (unmasked,
    unrotated) square for consumers that need plain height statistics.
    """

    region_id: str
    index: int
    side_px: int
    pixels: np.ndarray
    mask: np.ndarray
    orientation: int
    source: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class PatchSet:
    """Ordered, non-overlapping patches cut from one region."""

    region_id: str
    patches: tuple[Patch, ...]
    patch_grid_origin: tuple[int, int]  # (x, y) of the grid anchor
    grid_cells: tuple[tuple[int, int], ...]  # (row, col) per patch

    def __len__(self) -> int:
        return len(self.patches)


# ---------------------------------------------------------------------------
# I/O


def load_heightmap(image_path: str | Path, metadata_path: str | Path) -> HeightMap:
    """Read a 16-bit single-channel raster plus its JSON sidecar.

    The sidecar must supply ``lateral_resolution_um``; ``height_scale_nm``,
    ``painting_id`` and declared ``width_px``/``height_px`` are optional.
    """
    image_path = Path(image_path)
    metadata_path = Path(metadata_path)
    if not image_path.exists():
        raise FileNotFoundError(f"image not found: {image_path}")
    if not metadata_path.exists():
        raise FileNotFoundError(f"metadata not found: {metadata_path}")

    with Image.open(image_path) as img:
        if img.mode not in _ACCEPTED_16BIT_MODES:
            raise ValueError(
                f"{image_path}: expected a 16-bit single-channel image, got mode {img.mode!r}"
            )
        values = np.asarray(img).astype(np.float64)

    meta = json.loads(metadata_path.read_text())
    if "lateral_resolution_um" not in meta:
        raise ValueError(f"{metadata_path}: missing lateral_resolution_um")
    resolution = float(meta["lateral_resolution_um"])
    if not resolution > 0:
        raise ValueError(f"{metadata_path}: lateral_resolution_um must be positive")

    declared_w = meta.get("width_px")
    declared_h = meta.get("height_px")
    h, w = values.shape
    if declared_w is not None and int(declared_w) != w:
        raise ValueError(
            f"{image_path}: width {w} does not match declared width_px {declared_w}"
        )
    if declared_h is not None and int(declared_h) != h:
        raise ValueError(
            f"{image_path}: height {h} does not match declared height_px {declared_h}"
        )

    scale = meta.get("height_scale_nm")
    return HeightMap(
        values=values,
        lateral_resolution=resolution,
        source_id=str(meta.get("painting_id", image_path.stem)),
        height_scale_nm=None if scale is None else float(scale),
    )


def save_heightmap(hm: HeightMap, image_path: str | Path, metadata_path: str | Path) -> None:
    """Write a height map as 16-bit PNG/TIFF plus JSON sidecar.

    Values are mapped affinely onto the 16-bit range; the per-count scale
    is recorded in the sidecar.  The constant offset is dropped, which is
    harmless downstream (detrending removes constants).
    """
    v = hm.values
    vmin = float(v.min())
    vmax = float(v.max())
    scale = (vmax - vmin) / 65535.0 if vmax > vmin else 1.0
    counts = np.round((v - vmin) / scale).astype(np.uint16)
    Image.fromarray(counts).save(image_path)
    meta = {
        "painting_id": hm.source_id,
        "lateral_resolution_um": hm.lateral_resolution,
        "height_scale_nm": scale * (hm.height_scale_nm or 1.0),
        "width_px": hm.width_px,
        "height_px": hm.height_px,
    }
    Path(metadata_path).write_text(json.dumps(meta, indent=2))


def load_region_specs(path: str | Path) -> list[RegionSpec]:
    """Read region specs from a JSON array of rect or polygon entries."""
    entries = json.loads(Path(path).read_text())
    regions = []
    for e in entries:
        rect = tuple(e["rect"]) if "rect" in e else None
        poly = tuple(tuple(p) for p in e["polygon"]) if "polygon" in e else None
        regions.append(
            RegionSpec(
                region_id=e["region_id"],
                painting_id=e["painting_id"],
                rect=rect,
                polygon=poly,
            )
        )
    return regions


# ---------------------------------------------------------------------------
# detrending


def detrend(hm: HeightMap, filter_radius_cm: float = 0.5) -> HeightMap:
    """Remove large-scale warp: subtract a disk-mean-filtered copy.

    The mean filter uses a rasterized disk of the given radius with
    replicate padding at the borders; the subtraction leaves brushstroke-
    scale relief while cancelling canvas-scale trends.
    """
    if not filter_radius_cm > 0:
        raise ValueError("filter_radius_cm must be positive")
    radius_px = filter_radius_cm * 1e4 / hm.lateral_resolution
    if radius_px < 1.0:
        raise ValueError(
            f"filter radius {filter_radius_cm} cm is below one pixel at "
            f"{hm.lateral_resolution} um/px"
        )
    r = int(math.floor(radius_px))
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    kernel = (xx**2 + yy**2 <= radius_px**2).astype(np.float64)
    kernel /= kernel.sum()
    padded = np.pad(hm.values, r, mode="edge")
    smoothed = signal.fftconvolve(padded, kernel, mode="valid")
    return HeightMap(
        values=hm.values - smoothed,
        lateral_resolution=hm.lateral_resolution,
        source_id=hm.source_id,
        height_scale_nm=hm.height_scale_nm,
    )


# ---------------------------------------------------------------------------
# octagon masking and orientation


@lru_cache(maxsize=64)
def octagon_mask(side_px: int) -> np.ndarray:
    """Boolean support of the regular octagon inscribed in the square.

    The octagon is the square with its corners chamfered so that all eight
    sides are equal; it is invariant under 45 degree rotations about the
    center, which is what makes the eight-orientation augmentation safe.
    Pixel centers satisfying |x| + |y| <= sqrt(2) * side/2 are kept.
    """
    if side_px < 2:
        raise ValueError("side_px must be >= 2")
    c = np.arange(side_px, dtype=np.float64) + 0.5 - side_px / 2.0
    ax = np.abs(c)
    mask = ax[None, :] + ax[:, None] <= math.sqrt(2.0) * side_px / 2.0
    mask.setflags(write=False)
    return mask


def octagon_orient(
    patch_pixels: np.ndarray,
    orientation: int | np.random.Generator,
    *,
    region_id: str = "",
    index: int = 0,
) -> Patch:
    """Mask, rotate and standardize one square patch.

    ``orientation`` is an integer 0..7 (multiples of 45 degrees) or a
    Generator from which one is drawn.  Quarter turns are exact; odd
    multiples of 45 degrees use bilinear resampling, which never needs
    samples from outside the octagon's own support.  Pixels are
    standardized over the mask (constant patches map to all zeros) and the
    fill value outside the mask is 0.
    """
    if isinstance(orientation, np.random.Generator):
        orientation = int(orientation.integers(0, N_ORIENTATIONS))
    if not 0 <= orientation < N_ORIENTATIONS:
        raise ValueError(f"orientation must be in 0..7, got {orientation}")
    pixels = np.asarray(patch_pixels, dtype=np.float64)
    if pixels.ndim != 2 or pixels.shape[0] != pixels.shape[1]:
        raise ValueError(f"patch must be square, got shape {pixels.shape}")

    if orientation % 2 == 0:
        rotated = np.rot90(pixels, k=orientation // 2).copy()
    else:
        rotated = ndimage.rotate(
            pixels, 45.0 * orientation, reshape=False, order=1, mode="constant", cval=0.0
        )

    mask = octagon_mask(pixels.shape[0])
    vals = rotated[mask]
    mu = vals.mean()
    sd = vals.std()
    out = np.zeros_like(rotated)
    if sd > 1e-12 * max(1.0, abs(mu)):
        out[mask] = (vals - mu) / sd
    return Patch(
        region_id=region_id,
        index=index,
        side_px=pixels.shape[0],
        pixels=out,
        mask=mask,
        orientation=orientation,
        source=pixels,
    )


# ---------------------------------------------------------------------------
# patch grids


def patch_side_px(patch_size_cm: float, lateral_resolution_um: float) -> int:
    return int(round(patch_size_cm * 1e4 / lateral_resolution_um))


def patchify_region(
    hm: HeightMap, region: RegionSpec, patch_size_cm: float = 1.0
) -> PatchSet:
    """Cut the maximal grid of square patches fully inside the region.

    The grid anchors at the top-left of the region bounding box and runs
    row-major.  Each accepted square is octagon-masked and standardized at
    orientation 0; the raw square is kept on the patch for consumers that
    need unnormalized heights.
    """
    side = patch_side_px(patch_size_cm, hm.lateral_resolution)
    if side < 8:
        raise ValueError(
            f"patch side {side} px (from {patch_size_cm} cm at "
            f"{hm.lateral_resolution} um/px) is below the 8 px minimum"
        )
    min_x, min_y, max_x, max_y = region.bounds()
    if min_x < 0 or min_y < 0 or max_x > hm.width_px or max_y > hm.height_px:
        raise ValueError(
            f"region {region.region_id} exceeds map bounds "
            f"({hm.width_px}x{hm.height_px})"
        )

    x0 = int(math.ceil(min_x))
    y0 = int(math.ceil(min_y))
    n_cols = max(0, (int(math.floor(max_x)) - x0) // side)
    n_rows = max(0, (int(math.floor(max_y)) - y0) // side)

    if region.polygon is not None:
        from shapely.geometry import Polygon, box
        from shapely.prepared import prep

        poly = prep(Polygon(region.polygon))
        cell_ok = lambda x, y: poly.covers(box(x, y, x + side, y + side))
    else:
        cell_ok = lambda x, y: True  # grid construction already honors the rect

    patches: list[Patch] = []
    cells: list[tuple[int, int]] = []
    for row in range(n_rows):
        for col in range(n_cols):
            x = x0 + col * side
            y = y0 + row * side
            if not cell_ok(x, y):
                continue
            square = hm.values[y : y + side, x : x + side].copy()
            patches.append(
                octagon_orient(square, 0, region_id=region.region_id, index=len(patches))
            )
            cells.append((row, col))

    if not patches:
        raise ValueError(
            f"region {region.region_id} is too small for a single "
            f"{side}x{side} px patch"
        )
    return PatchSet(
        region_id=region.region_id,
        patches=tuple(patches),
        patch_grid_origin=(x0, y0),
        grid_cells=tuple(cells),
    )


def validate_region_areas(
    regions: list[RegionSpec],
    lateral_resolution_um: float,
    min_cm2: float = 180.0,
    max_cm2: float = 540.0,
) -> None:
    """Enforce area bounds for paintings that were split into regions.

    Paintings contributing a single region (the whole painting) are
    exempt; hand-selected sub-regions must stay within the configured
    band so unequal-size comparisons remain meaningful.
    """
    per_painting: dict[str, list[RegionSpec]] = {}
    for r in regions:
        per_painting.setdefault(r.painting_id, []).append(r)
    for painting, group in per_painting.items():
        if len(group) < 2:
            continue
        for r in group:
            area = r.area_cm2(lateral_resolution_um)
            if not min_cm2 <= area <= max_cm2:
                raise ValueError(
                    f"region {r.region_id} of {painting}: area {area:.1f} cm2 "
                    f"outside [{min_cm2}, {max_cm2}] cm2"
                )
