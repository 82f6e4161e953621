"""Manifest -> penultimate-activation feature CSV.

Consumes the augmentation manifest contract (item_id,group_id,file_path) and
emits the feature-table contract (item_id,group_id,f_0,...), one row per
manifest item in manifest order. Inference runs single-threaded in eval mode
with a fixed preprocessing recipe, so output bytes depend only on the input
images and the weight source.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .backbones import IMAGENET_MEAN, IMAGENET_STD, DEFAULT_BACKBONE, get_backbone

WEIGHT_SOURCES = ("pretrained", "random")


@dataclass(frozen=True)
class ExtractorConfig:
    manifest: str
    out_csv: str
    backbone: str = DEFAULT_BACKBONE
    weights: str = "pretrained"
    batch_size: int = 16

    def __post_init__(self):
        get_backbone(self.backbone)
        if self.weights not in WEIGHT_SOURCES:
            raise ValueError(f"weights must be one of {WEIGHT_SOURCES}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def read_manifest(path) -> list[tuple[str, str, str]]:
    """(item_id, group_id, image path) rows; paths resolve against the manifest."""
    base = Path(path).parent
    rows = []
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "item_id,group_id,file_path":
            raise ValueError(f"{path}: malformed manifest header {header!r}")
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


def _preprocess(path: str, resize: int, crop: int) -> torch.Tensor:
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
    except OSError as exc:
        raise ValueError(f"unreadable image {path}: {exc}") from exc
    w, h = im.size
    scale = resize / min(w, h)
    im = im.resize((max(1, round(w * scale)), max(1, round(h * scale))), Image.BILINEAR)
    w, h = im.size
    left, top = (w - crop) // 2, (h - crop) // 2
    im = im.crop((left, top, left + crop, top + crop))
    x = torch.from_numpy(np.asarray(im, dtype=np.float32) / 255.0).permute(2, 0, 1)
    mean = torch.tensor(IMAGENET_MEAN).view(3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(3, 1, 1)
    return (x - mean) / std


def _build_model(config: ExtractorConfig) -> torch.nn.Module:
    spec = get_backbone(config.backbone)
    try:
        model = spec.build(config.weights == "pretrained")
    except Exception as exc:
        raise ValueError(f"backbone unavailable: {config.backbone} with "
                         f"{config.weights} weights ({exc})") from exc
    model.eval()
    return model


def extract_features(config: ExtractorConfig) -> Path:
    """Run the backbone over every manifest item and write the feature CSV."""
    torch.set_num_threads(1)  # keeps reductions deterministic across runs
    spec = get_backbone(config.backbone)
    rows = read_manifest(config.manifest)
    model = _build_model(config)
    out = Path(config.out_csv)
    with torch.no_grad(), open(out, "w", newline="") as fh:
        fh.write("item_id,group_id," + ",".join(f"f_{j}" for j in range(spec.feature_width)) + "\n")
        for start in range(0, len(rows), config.batch_size):
            batch = rows[start:start + config.batch_size]
            x = torch.stack([_preprocess(p, spec.resize, spec.crop) for _, _, p in batch])
            feats = model(x).numpy()
            if feats.shape[1] != spec.feature_width:
                raise ValueError(f"backbone produced width {feats.shape[1]}, "
                                 f"expected {spec.feature_width}")
            for (item_id, gid, _), vec in zip(batch, feats):
                fh.write(f"{item_id},{gid}," + ",".join(f"{v:.9g}" for v in vec) + "\n")
    return out
