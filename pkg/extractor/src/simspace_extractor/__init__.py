"""Feature extraction adapter: images to penultimate-activation CSV."""

from .backbones import DEFAULT_BACKBONE, REGISTRY, get_backbone
from .extract import ExtractorConfig, extract_features, read_manifest

__version__ = "0.1.0"
