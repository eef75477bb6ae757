"""Synthetic scene generation and dataset file I/O.

A dataset directory holds an all-in-focus image (8-bit PNG), a depth
map in millimeters (PFM, float32), a `stack/` of focused frames, and a
`manifest.json` tying them together with the lens focal length, the
per-frame measured distances, and optionally the planted ground-truth
parameters. Everything here is seeded; nothing consults the clock or
ambient randomness, so identical inputs produce byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetError
from .optics import CameraParams
from .renderer import FocalStack, Scene, StackEntry, render_stack

MANIFEST_NAME = "manifest.json"
AIF_NAME = "aif.png"
DEPTH_NAME = "depth.pfm"
STACK_DIR = "stack"

# Patch palettes of the five printed calibration masks (RGB triples,
# colors spaced around the hue circle), plus white.
MASK_PALETTES = {
    1: ((255, 255, 0), (255, 80, 80), (255, 0, 255), (54, 97, 143),
        (51, 204, 204)),
    2: ((184, 124, 76), (126, 0, 0), (153, 51, 255), (217, 243, 255),
        (51, 204, 51)),
    3: ((226, 182, 89), (255, 229, 222), (204, 102, 255), (132, 174, 225),
        (22, 73, 117)),
    4: ((255, 219, 118), (255, 117, 194), (255, 93, 29), (0, 177, 249),
        (134, 117, 131)),
    5: ((255, 247, 208), (255, 179, 170), (255, 112, 148), (0, 106, 247),
        (0, 255, 80)),
}

WHITE = (255, 255, 255)
DEFAULT_COLORS = MASK_PALETTES[1] + (WHITE,)


@dataclass(frozen=True)
class MaskSpec:
    """A color-patch test chart: random palette squares on a grid."""

    width: int
    height: int
    patch_size: int
    colors: tuple = DEFAULT_COLORS
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("mask dimensions must be at least 1x1")
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        colors = tuple(tuple(int(c) for c in color) for color in self.colors)
        if not colors:
            raise ValueError("colors must be non-empty")
        for color in colors:
            if len(color) != 3 or any(c < 0 or c > 255 for c in color):
                raise ValueError(f"bad RGB triple: {color}")
        object.__setattr__(self, "colors", colors)


@dataclass(frozen=True)
class PlaneDepth:
    """Fronto-parallel plane at a constant depth."""

    depth_mm: float

    def __post_init__(self):
        if self.depth_mm <= 0:
            raise ValueError("plane depth must be positive")


@dataclass(frozen=True)
class SlantDepth:
    """Depth ramp, linear in the column index from near to far."""

    near_mm: float
    far_mm: float

    def __post_init__(self):
        if self.near_mm <= 0 or self.far_mm <= 0:
            raise ValueError("slant depths must be positive")


@dataclass(frozen=True)
class StepsDepth:
    """Piecewise-constant columns: (first_col, last_col, depth_mm) spans.

    The spans must partition the full width, in order.
    """

    steps: tuple

    def __post_init__(self):
        steps = tuple((int(c0), int(c1), float(d)) for c0, c1, d in self.steps)
        if not steps:
            raise ValueError("steps must be non-empty")
        for c0, c1, d in steps:
            if c0 > c1:
                raise ValueError(f"bad column span {c0}-{c1}")
            if d <= 0:
                raise ValueError("step depths must be positive")
        object.__setattr__(self, "steps", steps)


def synth_mask(spec: MaskSpec) -> np.ndarray:
    """Seeded patch chart as an (H, W, 3) float image in [0, 1]."""
    rows = -(-spec.height // spec.patch_size)
    cols = -(-spec.width // spec.patch_size)
    rng = np.random.default_rng(spec.seed)
    idx = rng.integers(0, len(spec.colors), size=(rows, cols))
    palette = np.asarray(spec.colors, dtype=float) / 255.0
    img = palette[idx]
    img = np.repeat(np.repeat(img, spec.patch_size, axis=0),
                    spec.patch_size, axis=1)
    return img[:spec.height, :spec.width]


def synth_depth(spec, width: int, height: int) -> np.ndarray:
    """Depth map in mm for one of the depth scene specs."""
    if width < 1 or height < 1:
        raise ValueError("depth map dimensions must be at least 1x1")
    if isinstance(spec, PlaneDepth):
        return np.full((height, width), float(spec.depth_mm))
    if isinstance(spec, SlantDepth):
        ramp = np.linspace(spec.near_mm, spec.far_mm, width)
        return np.tile(ramp, (height, 1))
    if isinstance(spec, StepsDepth):
        expected = 0
        out = np.empty((height, width))
        for c0, c1, d in spec.steps:
            if c0 != expected:
                raise ValueError(
                    f"step spans must partition the width; expected a span "
                    f"starting at column {expected}, got {c0}"
                )
            if c1 >= width:
                raise ValueError(f"step span {c0}-{c1} exceeds width {width}")
            out[:, c0:c1 + 1] = d
            expected = c1 + 1
        if expected != width:
            raise ValueError(
                f"step spans stop at column {expected - 1} "
                f"but the width is {width}"
            )
        return out
    raise TypeError(f"unknown depth spec: {spec!r}")


def parse_depth_spec(text: str):
    """Parse `plane:D`, `slant:NEAR,FAR`, or `steps:C0-C1:D,...`."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "plane":
            return PlaneDepth(float(rest))
        if kind == "slant":
            near, far = rest.split(",")
            return SlantDepth(float(near), float(far))
        if kind == "steps":
            steps = []
            for part in rest.split(","):
                span, _, depth = part.rpartition(":")
                c0, _, c1 = span.partition("-")
                steps.append((int(c0), int(c1), float(depth)))
            return StepsDepth(tuple(steps))
    except (ValueError, TypeError) as exc:
        raise ValueError(f"bad depth spec {text!r}: {exc}") from None
    raise ValueError(
        f"bad depth spec {text!r}: kind must be plane, slant, or steps"
    )


def write_pfm(path, data) -> None:
    """Write a float32 PFM: `Pf` grayscale or `PF` 3-channel.

    Scale is written as -1.0 (little-endian); rows run bottom-to-top.
    """
    data = np.asarray(data, dtype="<f4")
    if data.ndim == 2:
        magic = "Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        magic = "PF"
    else:
        raise ValueError("PFM data must be HxW or HxWx3")
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"{magic}\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(data).tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM file back as float64 (exact float32 values)."""
    buf = Path(path).read_bytes()

    def token(pos):
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetError(f"{path}: truncated PFM header")
        return buf[start:pos], pos

    try:
        magic, pos = token(0)
        if magic not in (b"Pf", b"PF"):
            raise DatasetError(f"{path}: not a PFM file (magic {magic!r})")
        wtok, pos = token(pos)
        htok, pos = token(pos)
        stok, pos = token(pos)
        w, h, scale = int(wtok), int(htok), float(stok)
    except (ValueError, DatasetError) as exc:
        if isinstance(exc, DatasetError):
            raise
        raise DatasetError(f"{path}: bad PFM header: {exc}") from None
    if w < 1 or h < 1 or scale == 0:
        raise DatasetError(f"{path}: bad PFM header values")
    pos += 1  # exactly one whitespace byte separates header and data
    channels = 1 if magic == b"Pf" else 3
    count = w * h * channels
    if len(buf) - pos < 4 * count:
        raise DatasetError(f"{path}: PFM payload truncated")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=pos)
    shape = (h, w) if channels == 1 else (h, w, 3)
    return np.flipud(data.reshape(shape)).astype(np.float64)


def write_png(path, img) -> None:
    """Quantize a [0, 1] float image to 8-bit PNG (RGB or grayscale)."""
    img = np.asarray(img, dtype=float)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    arr = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="RGB" if arr.ndim == 3 else "L").save(path)


def read_png(path) -> np.ndarray:
    """Read an 8-bit PNG as floats in [0, 1] (255 maps to 1.0)."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=float)
    return arr / 255.0


def write_image(path, img) -> None:
    """Write by extension: .png (8-bit) or .pfm (float32)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        write_png(path, img)
    elif suffix == ".pfm":
        write_pfm(path, img)
    else:
        raise ValueError(f"unsupported image extension: {path}")


def read_image(path) -> np.ndarray:
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        return read_png(path)
    if suffix == ".pfm":
        return read_pfm(path)
    raise ValueError(f"unsupported image extension: {path}")


@dataclass(frozen=True)
class ManifestEntry:
    file: str
    d_mm: float


@dataclass(frozen=True)
class PlantedParams:
    A: float
    e_mm: float


@dataclass(frozen=True)
class Manifest:
    focal_length_mm: float
    aif: str
    depth: str
    entries: tuple
    planted: PlantedParams | None = None


def write_scene(directory, stack: FocalStack, planted=None) -> Path:
    """Write a dataset directory for the stack; returns the manifest path.

    `planted` may be a CameraParams or PlantedParams to record the
    ground truth the stack was generated with.
    """
    if len(stack) < 1:
        raise ValueError("stack must contain at least one entry")
    directory = Path(directory)
    (directory / STACK_DIR).mkdir(parents=True, exist_ok=True)
    write_png(directory / AIF_NAME, stack.scene.image)
    write_pfm(directory / DEPTH_NAME, stack.scene.depth_mm)
    entries = []
    for i, entry in enumerate(stack.entries):
        name = f"{STACK_DIR}/{i:03d}.png"
        write_png(directory / name, entry.image)
        entries.append({"file": name, "d_mm": entry.d_mm})
    doc = {
        "focal_length_mm": stack.focal_length_mm,
        "aif": AIF_NAME,
        "depth": DEPTH_NAME,
        "entries": entries,
    }
    if planted is not None:
        doc["planted"] = {"A": float(planted.A), "e_mm": float(planted.e_mm)}
    manifest_path = directory / MANIFEST_NAME
    manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return manifest_path


def _manifest_field(doc, key, path):
    if key not in doc:
        raise DatasetError(f"{path}: manifest is missing the {key!r} field")
    return doc[key]


def read_scene(directory):
    """Load a dataset directory; returns (FocalStack, Manifest)."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DatasetError(f"no {MANIFEST_NAME} in {directory}")
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{manifest_path}: invalid JSON: {exc}") from None

    fl = float(_manifest_field(doc, "focal_length_mm", manifest_path))
    aif_name = _manifest_field(doc, "aif", manifest_path)
    depth_name = _manifest_field(doc, "depth", manifest_path)
    entry_docs = _manifest_field(doc, "entries", manifest_path)
    if not isinstance(entry_docs, list) or not entry_docs:
        raise DatasetError(
            f"{manifest_path}: 'entries' must be a non-empty list"
        )

    def load(name, kind):
        path = directory / name
        if not path.is_file():
            raise DatasetError(f"missing {kind} file: {path}")
        try:
            return read_image(path)
        except (OSError, ValueError) as exc:
            raise DatasetError(f"unreadable {kind} file {path}: {exc}") from None

    scene = Scene(image=load(aif_name, "all-in-focus"),
                  depth_mm=load(depth_name, "depth"))
    entries = []
    manifest_entries = []
    for i, ed in enumerate(entry_docs):
        if "file" not in ed or "d_mm" not in ed:
            raise DatasetError(
                f"{manifest_path}: entries[{i}] needs 'file' and 'd_mm'"
            )
        img = load(ed["file"], f"stack entry {i}")
        entries.append(StackEntry(image=img, d_mm=float(ed["d_mm"])))
        manifest_entries.append(ManifestEntry(ed["file"], float(ed["d_mm"])))

    planted = None
    if "planted" in doc:
        pd = doc["planted"]
        if "A" not in pd or "e_mm" not in pd:
            raise DatasetError(
                f"{manifest_path}: 'planted' needs 'A' and 'e_mm'"
            )
        planted = PlantedParams(A=float(pd["A"]), e_mm=float(pd["e_mm"]))

    stack = FocalStack(entries=tuple(entries), scene=scene,
                       focal_length_mm=fl)
    manifest = Manifest(focal_length_mm=fl, aif=aif_name, depth=depth_name,
                        entries=tuple(manifest_entries), planted=planted)
    return stack, manifest


def make_planted_dataset(directory, mask: MaskSpec, depth, params: CameraParams,
                         d_list, *, noise_sigma=0.0, backend="auto") -> Path:
    """Synthesize, render, and write a complete planted-truth dataset.

    Pixel noise (if any) is added to the stack frames only, from a
    dedicated substream of the mask seed, then clamped to [0, 1].
    """
    ds = list(d_list)
    if not ds:
        raise ValueError("d_list must not be empty")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    image = synth_mask(mask)
    depth_map = synth_depth(depth, mask.width, mask.height)
    scene = Scene(image=image, depth_mm=depth_map)
    stack = render_stack(scene, params, ds, backend=backend)
    if noise_sigma > 0:
        rng = np.random.default_rng([mask.seed, 1])
        noisy = tuple(
            StackEntry(
                image=np.clip(
                    entry.image + rng.normal(0.0, noise_sigma,
                                             entry.image.shape),
                    0.0, 1.0,
                ),
                d_mm=entry.d_mm,
            )
            for entry in stack.entries
        )
        stack = FocalStack(entries=noisy, scene=scene,
                           focal_length_mm=stack.focal_length_mm)
    return write_scene(directory, stack, planted=params)
