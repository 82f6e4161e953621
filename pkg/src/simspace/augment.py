"""Deterministic image augmentation with label propagation.

Seven transform stages in a fixed order (flip, affine, crop, blur,
contrast/brightness, Gaussian noise, salt-and-pepper), each applied
independently with its own probability. Every variant keeps its source
stimulus's id as group_id so the source's space coordinates can be
propagated to it as a training target. Per-item seeds are derived from
(dataset seed, item_id), so items can be generated in any order or in
parallel without changing a single pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image
from scipy import ndimage

from .core import Embedding, derive_seed, make_rng

MID_GRAY = 127.5


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB image; pixels shaped (height, width, 3), row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) RGB pixels, got shape {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if p.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {p.dtype}")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()


def load_image(path) -> RasterImage:
    with Image.open(path) as im:
        return RasterImage(np.asarray(im.convert("RGB"), dtype=np.uint8))


def save_image(img: RasterImage, path) -> None:
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p}")


def _check_range(name: str, rng: tuple[float, float]) -> None:
    if len(rng) != 2 or rng[0] > rng[1]:
        raise ValueError(f"{name} must be an ordered (lo, hi) pair, got {rng}")


@dataclass(frozen=True)
class AugmentSpec:
    """Transform parameters; defaults keep variants same-object similar."""

    flip_prob: float = 0.5
    affine_prob: float = 0.5
    max_rotation_deg: float = 15.0
    max_shear_deg: float = 8.0
    max_translate_frac: float = 0.05
    scale_range: tuple[float, float] = (0.9, 1.1)
    crop_prob: float = 0.5
    crop_fraction_range: tuple[float, float] = (0.85, 1.0)
    blur_prob: float = 0.5
    blur_sigma_range: tuple[float, float] = (0.0, 1.5)
    color_prob: float = 0.5
    contrast_range: tuple[float, float] = (0.8, 1.2)
    brightness_range: tuple[float, float] = (-25.5, 25.5)
    noise_prob: float = 0.5
    gauss_noise_sigma: float = 5.1
    salt_pepper_prob: float = 0.5
    salt_pepper_fraction: float = 0.01

    def __post_init__(self):
        for name in ("flip_prob", "affine_prob", "crop_prob", "blur_prob",
                     "color_prob", "noise_prob", "salt_pepper_prob",
                     "salt_pepper_fraction"):
            _check_prob(name, getattr(self, name))
        _check_range("scale_range", self.scale_range)
        _check_range("crop_fraction_range", self.crop_fraction_range)
        _check_range("blur_sigma_range", self.blur_sigma_range)
        _check_range("contrast_range", self.contrast_range)
        _check_range("brightness_range", self.brightness_range)
        if not 0.0 < self.crop_fraction_range[0] <= 1.0 or self.crop_fraction_range[1] > 1.0:
            raise ValueError("crop_fraction_range must lie in (0, 1]")
        if self.blur_sigma_range[0] < 0:
            raise ValueError("blur sigma must be >= 0")
        if self.gauss_noise_sigma < 0:
            raise ValueError("gauss_noise_sigma must be >= 0")

    @staticmethod
    def identity() -> "AugmentSpec":
        """Spec under which augment_image is the identity on pixels."""
        return AugmentSpec(flip_prob=0.0, affine_prob=0.0, crop_prob=0.0,
                           blur_prob=0.0, color_prob=0.0, noise_prob=0.0,
                           salt_pepper_prob=0.0)


def _apply_affine(buf: np.ndarray, rng: np.random.Generator, spec: AugmentSpec) -> np.ndarray:
    h, w = buf.shape[:2]
    rot = math.radians(rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg))
    shear = math.radians(rng.uniform(-spec.max_shear_deg, spec.max_shear_deg))
    tx = rng.uniform(-spec.max_translate_frac, spec.max_translate_frac) * w
    ty = rng.uniform(-spec.max_translate_frac, spec.max_translate_frac) * h
    s = rng.uniform(*spec.scale_range)
    # forward map: out = C + t + s * R(rot) @ Shear(shear) @ (in - C)
    R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
    Sh = np.array([[1.0, math.tan(shear)], [0.0, 1.0]])
    M = s * (R @ Sh)
    Minv = np.linalg.inv(M)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij")
    dx, dy = xs - cx - tx, ys - cy - ty
    src_x = Minv[0, 0] * dx + Minv[0, 1] * dy + cx
    src_y = Minv[1, 0] * dx + Minv[1, 1] * dy + cy
    out = np.empty_like(buf)
    for c in range(3):
        out[..., c] = ndimage.map_coordinates(buf[..., c], [src_y, src_x],
                                              order=1, mode="reflect")
    return out


def _apply_crop(buf: np.ndarray, rng: np.random.Generator, spec: AugmentSpec) -> np.ndarray:
    h, w = buf.shape[:2]
    frac = rng.uniform(*spec.crop_fraction_range)
    cw, ch = int(round(frac * w)), int(round(frac * h))
    if cw < 1 or ch < 1:
        raise ValueError(f"crop fraction {frac:.4g} yields an empty window for {w}x{h} image")
    x0 = int(rng.integers(0, w - cw + 1))
    y0 = int(rng.integers(0, h - ch + 1))
    # resize the window back to full size (bilinear, pixel-center aligned)
    xs = x0 + (np.arange(w, dtype=float) + 0.5) * cw / w - 0.5
    ys = y0 + (np.arange(h, dtype=float) + 0.5) * ch / h - 0.5
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    out = np.empty_like(buf)
    for c in range(3):
        out[..., c] = ndimage.map_coordinates(buf[..., c], [gy, gx],
                                              order=1, mode="reflect")
    return out


def augment_image(img: RasterImage, spec: AugmentSpec, seed: int) -> RasterImage:
    """Apply the transform chain to one image, deterministically per seed."""
    rng = make_rng(seed)
    buf = img.pixels.astype(float)

    if rng.random() < spec.flip_prob:
        buf = buf[:, ::-1, :].copy()
    if rng.random() < spec.affine_prob:
        buf = _apply_affine(buf, rng, spec)
    if rng.random() < spec.crop_prob:
        buf = _apply_crop(buf, rng, spec)
    if rng.random() < spec.blur_prob:
        sigma = rng.uniform(*spec.blur_sigma_range)
        if sigma > 0:
            for c in range(3):
                buf[..., c] = ndimage.gaussian_filter(buf[..., c], sigma, mode="reflect")
    if rng.random() < spec.color_prob:
        contrast = rng.uniform(*spec.contrast_range)
        brightness = rng.uniform(*spec.brightness_range)
        buf = (buf - MID_GRAY) * contrast + MID_GRAY + brightness
    if rng.random() < spec.noise_prob and spec.gauss_noise_sigma > 0:
        buf = buf + rng.normal(0.0, spec.gauss_noise_sigma, size=buf.shape)
    if rng.random() < spec.salt_pepper_prob and spec.salt_pepper_fraction > 0:
        h, w = buf.shape[:2]
        hit = rng.random((h, w)) < spec.salt_pepper_fraction
        salt = rng.random((h, w)) < 0.5
        buf[hit & salt] = 255.0
        buf[hit & ~salt] = 0.0

    return RasterImage(np.clip(np.rint(buf), 0, 255).astype(np.uint8))


@dataclass(frozen=True)
class AugmentedDataset:
    """factor variants per original; item ids are '<stimulus>#<k>'."""

    items: tuple[tuple[str, str, RasterImage], ...]
    factor: int

    def __post_init__(self):
        item_ids = [i for i, _, _ in self.items]
        if len(set(item_ids)) != len(item_ids):
            raise ValueError("duplicate item_ids")
        groups = {g for _, g, _ in self.items}
        if groups and len(self.items) != self.factor * len(groups):
            raise ValueError("item count does not equal factor x number of originals")

    @property
    def group_ids(self) -> tuple[str, ...]:
        return tuple(g for _, g, _ in self.items)


def augment_dataset(originals: Mapping[str, RasterImage], factor: int,
                    spec: AugmentSpec, seed: int) -> AugmentedDataset:
    """Generate factor variants per original stimulus."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if not originals:
        raise ValueError("no original images")
    items = []
    for sid in sorted(originals):
        for k in range(factor):
            item_id = f"{sid}#{k}"
            variant = augment_image(originals[sid], spec, derive_seed(seed, item_id))
            items.append((item_id, sid, variant))
    return AugmentedDataset(tuple(items), factor)


def propagate_labels(dataset: AugmentedDataset, embedding: Embedding) -> dict[str, np.ndarray]:
    """Target map assigning each group its original's space coordinates."""
    known = set(embedding.ids)
    targets: dict[str, np.ndarray] = {}
    for _, gid, _ in dataset.items:
        if gid not in known:
            raise ValueError(f"unknown group_id on join: {gid}")
        if gid not in targets:
            targets[gid] = embedding.point(gid)
    return targets


def write_augmented_dataset(dataset: AugmentedDataset, out_dir) -> Path:
    """Save PNGs plus a manifest CSV (item_id,group_id,file_path)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        fh.write("item_id,group_id,file_path\n")
        for item_id, gid, img in dataset.items:
            fname = item_id.replace("#", "_") + ".png"
            save_image(img, out / fname)
            fh.write(f"{item_id},{gid},{fname}\n")
    return manifest


def load_manifest(path) -> list[tuple[str, str, str]]:
    """Rows of (item_id, group_id, file_path); paths relative to the manifest."""
    rows = []
    base = Path(path).parent
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "item_id,group_id,file_path":
            raise ValueError(f"{path}: malformed manifest header")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}: malformed manifest row {ln}")
            rows.append((parts[0], parts[1], str(base / parts[2])))
    if not rows:
        raise ValueError(f"{path}: no items")
    return rows
