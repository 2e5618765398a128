"""Synthetic RGB-X video generator.

Moving geometric shapes (squares and discs) over a textured background with
exact rasterized ground-truth masks. The RGB channel can be corrupted
(low-contrast, darkness, clutter) while the X channel renders an
object-correlated signal (thermal / depth / event proxies), emulating the
scenarios where the auxiliary modality carries the information RGB loses.

Every pixel is quantized to the 8-bit grid at generation time, so in-memory
samples equal their PPM/PGM round trip bit for bit. Each sequence is a pure
function of (seed, index) and may be generated on any worker.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError


@dataclass
class VideoSample:
    """One synchronized RGB + X + mask sequence."""
    frames: np.ndarray          # (T, H, W, 3) floats in [0, 1]
    xmaps: np.ndarray           # (T, H, W, 1) floats in [0, 1]
    masks: np.ndarray           # (T, H, W) uint8 object ids, 0 = background
    meta: dict = field(default_factory=dict)
    name: str = ""

    @property
    def num_objects(self):
        return int(self.meta.get("O", self.masks.max()))

    def validate(self):
        t = self.frames.shape[0]
        if self.xmaps.shape[0] != t or self.masks.shape[0] != t:
            raise ContractError("frames/xmaps/masks lengths differ")
        if self.frames.shape[1:3] != self.masks.shape[1:3] or \
                self.xmaps.shape[1:3] != self.masks.shape[1:3]:
            raise ContractError("frames/xmaps/masks dims differ")
        if not (self.masks[0] > 0).any():
            raise ContractError("first-frame mask is empty")


def _quantize(arr):
    return np.round(np.clip(arr, 0.0, 1.0) * 255.0) / 255.0


def _background(rng, h, w):
    """Low-frequency textured background, one value map per RGB channel."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    base = 0.18 + 0.08 * rng.random()
    tex = np.zeros((h, w))
    for _ in range(2):
        fy, fx = rng.uniform(0.5, 2.0, size=2)
        phase = rng.uniform(0, 2 * np.pi, size=2)
        tex += 0.02 * np.cos(2 * np.pi * fy * yy / h + phase[0]) \
            * np.cos(2 * np.pi * fx * xx / w + phase[1])
    chans = base + tex[..., None] + rng.uniform(-0.02, 0.02, size=3)
    return np.clip(chans, 0.05, 0.45)


class _Shape:
    def __init__(self, rng, h, w, min_size, max_size, min_speed, max_speed):
        self.kind = rng.choice(["square", "disc"])
        self.size = float(rng.uniform(min_size, max_size))
        half = self.size / 2.0
        self.cy = float(rng.uniform(half, h - 1 - half))
        self.cx = float(rng.uniform(half, w - 1 - half))
        speed = rng.uniform(min_speed, max_speed)
        angle = rng.uniform(0, 2 * np.pi)
        self.vy = speed * np.sin(angle)
        self.vx = speed * np.cos(angle)
        self.speed = float(speed)
        self.color = 0.55 + 0.4 * rng.random(3)
        self.x_level = float(0.8 + 0.15 * rng.random())
        self.h, self.w = h, w

    def step(self):
        half = self.size / 2.0
        for attr, v_attr, hi in (("cy", "vy", self.h - 1 - half),
                                 ("cx", "vx", self.w - 1 - half)):
            pos = getattr(self, attr) + getattr(self, v_attr)
            if pos < half:
                pos = 2 * half - pos
                setattr(self, v_attr, -getattr(self, v_attr))
            elif pos > hi:
                pos = 2 * hi - pos
                setattr(self, v_attr, -getattr(self, v_attr))
            setattr(self, attr, pos)

    def raster(self, yy, xx):
        half = self.size / 2.0
        if self.kind == "square":
            return (np.abs(yy - self.cy) <= half) & \
                (np.abs(xx - self.cx) <= half)
        return (yy - self.cy) ** 2 + (xx - self.cx) ** 2 <= half ** 2


def _boundary_ring(mask_plane):
    """Object-boundary pixels (4-neighbor) dilated by one pixel."""
    m = mask_plane
    pad = np.pad(m, 1)
    nb_bg = (~pad[:-2, 1:-1] | ~pad[2:, 1:-1]
             | ~pad[1:-1, :-2] | ~pad[1:-1, 2:])
    ring = m & nb_bg
    pr = np.pad(ring, 1)
    return (pr[:-2, 1:-1] | pr[2:, 1:-1] | pr[1:-1, :-2] | pr[1:-1, 2:]
            | ring)


def generate_sequence(cfg, index):
    """Deterministically generate sequence ``index`` of a SynthConfig."""
    cfg.validate()
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed),
                                                        int(index)]))
    h, w, t_total = cfg.height, cfg.width, cfg.frames
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    num_obj = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
    objects = [_Shape(rng, h, w, cfg.min_size, cfg.max_size,
                      cfg.min_speed, cfg.max_speed) for _ in range(num_obj)]
    distractors = []
    if cfg.rgb_corruption == "clutter":
        n_d = int(round(1 + 4 * cfg.severity))
        distractors = [_Shape(rng, h, w, cfg.min_size, cfg.max_size,
                              cfg.min_speed, cfg.max_speed)
                       for _ in range(n_d)]
    bg = _background(rng, h, w)

    frames = np.empty((t_total, h, w, 3))
    xmaps = np.empty((t_total, h, w, 1))
    masks = np.empty((t_total, h, w), dtype=np.uint8)

    for t in range(t_total):
        if t > 0:
            for s in objects + distractors:
                s.step()
        mask = np.zeros((h, w), dtype=np.uint8)
        for oid, s in enumerate(objects, start=1):
            mask[s.raster(yy, xx)] = oid
        masks[t] = mask

        rgb = bg.copy()
        for s in distractors:
            rgb[s.raster(yy, xx)] = s.color
        for oid, s in enumerate(objects, start=1):
            rgb[mask == oid] = s.color

        sev = cfg.severity
        if cfg.rgb_corruption == "low-contrast":
            rgb = bg + (rgb - bg) * (1.0 - sev)
            rgb = rgb + rng.normal(0.0, 0.02 + 0.05 * sev, size=rgb.shape)
        elif cfg.rgb_corruption == "darkness":
            rgb = rgb * (1.0 - 0.9 * sev)
            rgb = rgb + rng.normal(0.0, 0.02 + 0.03 * sev, size=rgb.shape)
        else:
            rgb = rgb + rng.normal(0.0, 0.01, size=rgb.shape)
        frames[t] = _quantize(rgb)

        if cfg.x_signal == "thermal":
            x = 0.08 + rng.normal(0.0, 0.01, size=(h, w))
            for oid, s in enumerate(objects, start=1):
                x[mask == oid] = s.x_level
        elif cfg.x_signal == "depth":
            x = 0.2 + 0.3 * (yy / max(1, h - 1)) \
                + rng.normal(0.0, 0.01, size=(h, w))
            for oid, s in enumerate(objects, start=1):
                x[mask == oid] = s.x_level
        else:  # event proxy: boundary response scaled by speed
            x = 0.05 + rng.normal(0.0, 0.02, size=(h, w))
            for oid, s in enumerate(objects, start=1):
                ring = _boundary_ring(mask == oid)
                x[ring] = 0.3 + 0.7 * min(1.0, s.speed / cfg.max_speed)
        xmaps[t] = _quantize(x)[..., None]

    scenario = f"{cfg.rgb_corruption}@{cfg.severity:g}/{cfg.x_signal}"
    sample = VideoSample(frames, xmaps, masks,
                         meta={"T": t_total, "H": h, "W": w, "O": num_obj,
                               "scenario": scenario})
    sample.validate()
    return sample


def generate_dataset(cfg):
    return [generate_sequence(cfg, i) for i in range(cfg.num_sequences)]


def modality_gaps(sample):
    """(RGB luminance gap, X gap) between object and background pixels,
    averaged over frames. Used to verify corruption severity."""
    rgb_gaps, x_gaps = [], []
    for t in range(sample.frames.shape[0]):
        obj = sample.masks[t] > 0
        if not obj.any() or obj.all():
            continue
        lum = sample.frames[t].mean(axis=2)
        rgb_gaps.append(abs(lum[obj].mean() - lum[~obj].mean()))
        xch = sample.xmaps[t, :, :, 0]
        x_gaps.append(abs(xch[obj].mean() - xch[~obj].mean()))
    return float(np.mean(rgb_gaps)), float(np.mean(x_gaps))
