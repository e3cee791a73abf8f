"""Dual-path network assembly.

One weight-shared feature extractor serves both temporal paths: the current
frame is extracted once per step and the history path is fed from a ring
buffer of previously extracted pyramids, so no frame ever passes through the
extractor twice.  Fusion runs independently per pyramid level and the fused
pyramid goes to a detection head.

The desk-scale extractor here is a deterministic box-filter pyramid and the
desk-scale head scores thresholded blobs; together they exercise every
architectural contract without any training.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Protocol, Sequence

import numpy as np
from scipy import ndimage

from .boxes import BBox, Detection
from .fusion import FusionSettings, LsfmWeights, fuse, init_weights, plan_channels
from .tensor import FeatureMap

PYRAMID_RATES = (8, 16, 32)

# Fusion input widths per pyramid level for the three model sizes.
MODEL_CHANNELS = {
    "S": (128, 256, 512),
    "M": (192, 384, 768),
    "L": (256, 512, 1024),
}


class NonMonotonicIndex(ValueError):
    """Buffer pushes must use strictly increasing frame indices."""


@dataclass(frozen=True)
class Frame:
    """One stream sample.  pixels is an opaque payload: a 2-d grayscale
    array, an object exposing rasterize() -> 2-d array, or None when only
    the geometry matters."""

    index: int
    timestamp_ms: float
    pixels: Any = None


@dataclass(frozen=True)
class FeaturePyramid:
    """Per-frame feature maps at down-sampling rates /8, /16, /32."""

    levels: tuple[FeatureMap, ...]

    def __post_init__(self):
        if len(self.levels) != len(PYRAMID_RATES):
            raise ValueError(f"expected {len(PYRAMID_RATES)} levels, got {len(self.levels)}")


class FeatureExtractor(Protocol):
    model_size: str

    def extract(self, frame: Frame) -> FeaturePyramid: ...


class DetectionHead(Protocol):
    def predict(self, pyramid: FeaturePyramid) -> list[Detection]: ...


def _block_reduce_mean(img: np.ndarray, rate: int) -> np.ndarray:
    """Mean-pool with ceil-sized output; edge blocks cover fewer pixels."""
    h, w = img.shape
    row_starts = np.arange(0, h, rate)
    col_starts = np.arange(0, w, rate)
    sums = np.add.reduceat(np.add.reduceat(img, row_starts, axis=0), col_starts, axis=1)
    row_counts = np.minimum(row_starts + rate, h) - row_starts
    col_counts = np.minimum(col_starts + rate, w) - col_starts
    return sums / np.outer(row_counts, col_counts)


class BoxFilterExtractor:
    """Deterministic toy extractor: box-filter downsampling to /8, /16, /32
    plus a fixed per-channel positive scaling to lift each level to its
    model-size channel width.  A single instance is shared by both temporal
    paths; `calls` counts invocations."""

    def __init__(self, model_size: str = "S", seed: int = 0):
        if model_size not in MODEL_CHANNELS:
            raise ValueError(f"model_size must be one of {sorted(MODEL_CHANNELS)}")
        self.model_size = model_size
        rng = np.random.default_rng(seed)
        self._lifts = [rng.uniform(0.5, 1.5, size=c) for c in MODEL_CHANNELS[model_size]]
        self.calls = 0

    def extract(self, frame: Frame) -> FeaturePyramid:
        self.calls += 1
        img = frame.pixels
        if img is None:
            raise ValueError(f"frame {frame.index} carries no image payload")
        if not isinstance(img, np.ndarray):
            img = img.rasterize()
        img = np.asarray(img, dtype=np.float64)
        levels = []
        for rate, lift in zip(PYRAMID_RATES, self._lifts):
            pooled = _block_reduce_mean(img, rate)
            stack = pooled[None, :, :] * lift[:, None, None]
            levels.append(FeatureMap.from_array(stack))
        return FeaturePyramid(tuple(levels))


class BlobHead:
    """Pass-through scorer: thresholds the channel-mean of the finest fused
    level and reports each connected blob as a detection, scored by its mean
    activation (clamped to [0, 1])."""

    def __init__(self, threshold: float = 0.3, category: int = 0):
        self.threshold = threshold
        self.category = category

    def predict(self, pyramid: FeaturePyramid) -> list[Detection]:
        rate = PYRAMID_RATES[0]
        saliency = pyramid.levels[0].to_array().mean(axis=0)
        labels, count = ndimage.label(saliency > self.threshold)
        dets = []
        for lab in range(1, count + 1):
            rows, cols = np.nonzero(labels == lab)
            box = BBox(
                x_min=float(cols.min() * rate),
                y_min=float(rows.min() * rate),
                x_max=float((cols.max() + 1) * rate),
                y_max=float((rows.max() + 1) * rate),
            )
            score = float(min(1.0, max(0.0, saliency[rows, cols].mean())))
            dets.append(Detection(bbox=box, category=self.category, score=score))
        return dets


class PaddingPolicy(Enum):
    REPLICATE_CURRENT = "replicate-current"
    ZERO = "zero"


def _zero_like(pyr: FeaturePyramid) -> FeaturePyramid:
    return FeaturePyramid(tuple(FeatureMap.zeros(*level.shape) for level in pyr.levels))


class FeatureBuffer:
    """Index-keyed cache of the most recent pyramids, capacity n_history *
    delta_t.  Gathering strides backwards through it; indices that fall off
    the front of the stream (or were never stored) are padded."""

    def __init__(self, capacity: int, padding_policy: PaddingPolicy = PaddingPolicy.REPLICATE_CURRENT):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.padding_policy = padding_policy
        self.slots: dict[int, FeaturePyramid] = {}

    def push(self, index: int, pyr: FeaturePyramid) -> None:
        if self.slots and index <= max(self.slots):
            raise NonMonotonicIndex(f"index {index} not greater than stored {max(self.slots)}")
        self.slots[index] = pyr
        while len(self.slots) > self.capacity:
            del self.slots[min(self.slots)]

    def gather(self, t: int, n: int, delta_t: int, current: FeaturePyramid) -> list[FeaturePyramid]:
        """Pyramids for t - delta_t, t - 2*delta_t, ..., t - n*delta_t,
        most-recent-first, padding any gap per the policy."""
        pad = current if self.padding_policy is PaddingPolicy.REPLICATE_CURRENT else _zero_like(current)
        out = []
        for i in range(1, n + 1):
            idx = t - i * delta_t
            out.append(self.slots.get(idx, pad) if idx >= 0 else pad)
        return out


@dataclass
class DualPathNetwork:
    """The full assembly: extractor, per-level fusion, head, feature buffer.

    With fusion.n_history == 0 the history path is disabled and the current
    pyramid passes straight to the head.
    """

    extractor: FeatureExtractor
    head: DetectionHead
    fusion: FusionSettings = field(default_factory=FusionSettings)
    weight_seed: int = 0
    padding_policy: PaddingPolicy = PaddingPolicy.REPLICATE_CURRENT
    buffer: Optional[FeatureBuffer] = field(init=False, default=None)

    def __post_init__(self):
        self._channels = MODEL_CHANNELS[self.extractor.model_size]
        if self.fusion.n_history > 0:
            self._configs = [self.fusion.config_for(d) for d in self._channels]
            self._weights: list[LsfmWeights] = [
                init_weights(cfg, plan_channels(cfg), self.weight_seed) for cfg in self._configs
            ]
            self.buffer = FeatureBuffer(
                capacity=self.fusion.n_history * self.fusion.delta_t,
                padding_policy=self.padding_policy,
            )

    def level_weights(self, level: int) -> LsfmWeights:
        return self._weights[level]

    def fuse_pyramid(self, t: int, current: FeaturePyramid, history: Sequence[FeaturePyramid]) -> FeaturePyramid:
        fused = tuple(
            fuse(cfg, w, current.levels[i], [h.levels[i] for h in history])
            for i, (cfg, w) in enumerate(zip(self._configs, self._weights))
        )
        return FeaturePyramid(fused)

    def step(self, frame: Frame) -> list[Detection]:
        """Process one frame: a single extractor call, buffered history,
        per-level fusion, then the head.  The fresh pyramid is buffered
        after use."""
        current = self.extractor.extract(frame)
        if self.fusion.n_history == 0:
            return self.head.predict(current)
        history = self.buffer.gather(frame.index, self.fusion.n_history, self.fusion.delta_t, current)
        dets = self.head.predict(self.fuse_pyramid(frame.index, current, history))
        self.buffer.push(frame.index, current)
        return dets
