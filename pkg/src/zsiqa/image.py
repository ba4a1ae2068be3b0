"""8-bit RGB images and codec I/O.

Supported codecs are PNG, BMP, and baseline JPEG; anything else is
rejected so scores never silently depend on an exotic decode path.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError

SUPPORTED_FORMATS = ("PNG", "BMP", "JPEG")


@dataclass(frozen=True)
class RgbImage:
    """Interleaved row-major RGB pixels, shape (height, width, 3), uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3:
            raise DecodeError(f"expected (H, W, 3) pixel array, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise DecodeError(f"expected uint8 pixels, got {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DecodeError("image must be at least 1x1")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def copy(self) -> "RgbImage":
        return RgbImage(self.pixels.copy())

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


def decode_image(data: bytes) -> RgbImage:
    """Decode a PNG, BMP, or JPEG byte stream.

    PNG and BMP decodes are pixel-exact; JPEG follows libjpeg reference
    behavior.  Malformed streams and unsupported codecs raise DecodeError
    with the codec diagnostic.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            fmt = im.format
            if fmt not in SUPPORTED_FORMATS:
                raise DecodeError(f"unsupported image format {fmt!r}")
            im = im.convert("RGB")
            im.load()
            pixels = np.asarray(im, dtype=np.uint8)
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    return RgbImage(pixels)


def read_image(path) -> RgbImage:
    """Read and decode an image file.  Missing files raise the usual OSError."""
    return decode_image(Path(path).read_bytes())


def save_image(img: RgbImage, path) -> Path:
    """Write an RgbImage as PNG or BMP, chosen by file extension."""
    path = Path(path)
    fmt = {".png": "PNG", ".bmp": "BMP"}.get(path.suffix.lower())
    if fmt is None:
        raise DecodeError(f"unsupported output extension {path.suffix!r} (use .png or .bmp)")
    Image.fromarray(img.pixels, mode="RGB").save(path, format=fmt)
    return path
