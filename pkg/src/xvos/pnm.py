"""Binary PPM/PGM I/O and the on-disk dataset layout.

One directory per sequence:
  frame_%04d.ppm  (P6, 8-bit RGB)
  x_%04d.pgm      (P5, 8-bit)
  mask_%04d.pgm   (P5, pixel value = object id)
  meta.json       (T, H, W, O, scenario)

Frame numbering is 1-based. Pixel data round-trips losslessly; the generator
quantizes to the 8-bit grid, so in-memory and on-disk datasets are identical.
"""

from __future__ import annotations

import json
import os
import re

import numpy as np

from .errors import ContractError


def _write_pnm(path, magic, arr):
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise ContractError(f"pnm write expects uint8, got {arr.dtype}")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"{magic}\n{w} {h}\n255\n".encode())
        fh.write(arr.tobytes())


def write_pgm(path, arr):
    if arr.ndim != 2:
        raise ContractError(f"pgm needs (H, W), got {arr.shape}")
    _write_pnm(path, "P5", arr)


def write_ppm(path, arr):
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ContractError(f"ppm needs (H, W, 3), got {arr.shape}")
    _write_pnm(path, "P6", arr)


def _read_pnm(path, magic, channels):
    with open(path, "rb") as fh:
        data = fh.read()
    # header: magic, width, height, maxval; '#' comments allowed
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", data[pos:])
        if m is None:
            raise ContractError(f"truncated PNM header in {path}")
        tok = m.group(1)
        pos += m.end()
        if not tok.startswith(b"#"):
            tokens.append(tok)
    if tokens[0] != magic.encode():
        raise ContractError(f"{path}: expected {magic}, got "
                            f"{tokens[0].decode(errors='replace')}")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ContractError(f"{path}: only maxval 255 supported")
    pos += 1  # single whitespace byte after the maxval token
    n = h * w * channels
    raw = data[pos:pos + n]
    if len(raw) != n:
        raise ContractError(f"{path}: expected {n} pixel bytes, got "
                            f"{len(raw)}")
    arr = np.frombuffer(raw, dtype=np.uint8)
    return arr.reshape((h, w) if channels == 1 else (h, w, channels)).copy()


def read_pgm(path):
    return _read_pnm(path, "P5", 1)


def read_ppm(path):
    return _read_pnm(path, "P6", 3)


# ---------------------------------------------------------------------------
# dataset directories
# ---------------------------------------------------------------------------

def save_dataset(root, samples):
    from .synth import VideoSample  # noqa: F401  (type of the elements)
    os.makedirs(root, exist_ok=True)
    for i, s in enumerate(samples):
        seq = os.path.join(root, f"seq_{i:04d}")
        os.makedirs(seq, exist_ok=True)
        t_total = s.frames.shape[0]
        for t in range(t_total):
            rgb = np.round(s.frames[t] * 255.0).astype(np.uint8)
            xch = np.round(s.xmaps[t, :, :, 0] * 255.0).astype(np.uint8)
            write_ppm(os.path.join(seq, f"frame_{t + 1:04d}.ppm"), rgb)
            write_pgm(os.path.join(seq, f"x_{t + 1:04d}.pgm"), xch)
            write_pgm(os.path.join(seq, f"mask_{t + 1:04d}.pgm"),
                      s.masks[t].astype(np.uint8))
        with open(os.path.join(seq, "meta.json"), "w") as fh:
            json.dump(s.meta, fh, indent=1, sort_keys=True)
            fh.write("\n")


def load_dataset(root):
    from .synth import VideoSample
    if not os.path.isdir(root):
        raise FileNotFoundError(f"dataset directory '{root}' does not exist")
    names = sorted(d for d in os.listdir(root)
                   if os.path.isdir(os.path.join(root, d)))
    if not names:
        raise FileNotFoundError(f"no sequence directories under '{root}'")
    samples = []
    for name in names:
        seq = os.path.join(root, name)
        with open(os.path.join(seq, "meta.json")) as fh:
            meta = json.load(fh)
        t_total = int(meta["T"])
        frames, xmaps, masks = [], [], []
        for t in range(1, t_total + 1):
            frames.append(read_ppm(os.path.join(seq, f"frame_{t:04d}.ppm"))
                          .astype(np.float64) / 255.0)
            xmaps.append(read_pgm(os.path.join(seq, f"x_{t:04d}.pgm"))
                         .astype(np.float64)[..., None] / 255.0)
            masks.append(read_pgm(os.path.join(seq, f"mask_{t:04d}.pgm")))
        sample = VideoSample(np.stack(frames), np.stack(xmaps),
                             np.stack(masks), meta, name=name)
        sample.validate()
        samples.append(sample)
    return samples
