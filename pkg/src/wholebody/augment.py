"""Synthetic motion blur for training-image augmentation.

A kernel is the normalized trace of a random camera-shake path: a 2D
random walk whose momentum and step noise grow with ``intensity``, splatted
bilinearly onto a ``size x size`` grid.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(eq=False)
class BlurKernel:
    weights: np.ndarray  # (size, size), non-negative, sums to 1
    intensity: float
    seed: int

    @property
    def size(self):
        return self.weights.shape[0]


def _walk(n_steps, intensity, rng):
    """Random-walk trajectory of complex points starting at 0."""
    # momentum keeps a low intensity path short and straight; jitter bends it
    jitter = 0.02 + 0.6 * intensity
    step = 0.05 + 0.45 * intensity
    heading = rng.uniform(0.0, 2.0 * np.pi)
    velocity = step * np.exp(1j * heading)
    pts = np.zeros(n_steps, dtype=complex)
    for i in range(1, n_steps):
        velocity = velocity + jitter * step * (rng.normal() + 1j * rng.normal())
        velocity *= step / max(abs(velocity), 1e-12)
        pts[i] = pts[i - 1] + velocity
    return pts


def _splat(points, size):
    kernel = np.zeros((size, size))
    x0 = np.floor(points.real).astype(int)
    y0 = np.floor(points.imag).astype(int)
    fx = points.real - x0
    fy = points.imag - y0
    for dx, dy, w in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)), (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        xs, ys = x0 + dx, y0 + dy
        ok = (xs >= 0) & (xs < size) & (ys >= 0) & (ys < size)
        np.add.at(kernel, (ys[ok], xs[ok]), w[ok])
    return kernel


def generate_kernel(size=15, intensity=0.5, seed=0):
    """Motion-blur kernel from a seeded random shake trajectory.

    ``intensity`` in ``[0, 1]`` scales the path length relative to the
    kernel size; ``intensity = 0`` gives the identity (a single centre tap).
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {size}")
    if not 0.0 <= intensity <= 1.0:
        raise ValueError(f"intensity must lie in [0, 1], got {intensity}")
    c = size // 2
    kernel = np.zeros((size, size))
    if intensity == 0.0 or size == 1:
        kernel[c, c] = 1.0
        return BlurKernel(kernel, float(intensity), int(seed))
    rng = np.random.default_rng(seed)
    pts = _walk(4 * size, intensity, rng)
    pts -= pts.mean()
    extent = max(np.abs(pts.real).max(), np.abs(pts.imag).max(), 1e-12)
    reach = intensity * (size - 1) / 2.0
    pts = pts * min(1.0, reach / extent) + complex(c, c)
    kernel = _splat(pts, size)
    kernel /= kernel.sum()
    return BlurKernel(kernel, float(intensity), int(seed))


def convolve(image, kernel):
    """Blur an ``(H, W)`` or ``(H, W, C)`` image, replicating border pixels.

    The kernel is applied as a correlation centred on each pixel, so the
    output has the input's shape and dtype (integer images are rounded and
    clipped to their range).
    """
    image = np.asarray(image)
    w = kernel.weights if isinstance(kernel, BlurKernel) else np.asarray(kernel, dtype=float)
    data = image.astype(float)
    if data.ndim == 2:
        out = ndimage.correlate(data, w, mode="nearest")
    elif data.ndim == 3:
        out = np.stack([ndimage.correlate(data[..., k], w, mode="nearest") for k in range(data.shape[2])], axis=2)
    else:
        raise ValueError(f"expected an (H, W) or (H, W, C) image, got shape {image.shape}")
    if np.issubdtype(image.dtype, np.integer):
        info = np.iinfo(image.dtype)
        out = np.clip(np.rint(out), info.min, info.max)
    return out.astype(image.dtype)


# ---------------------------------------------------------------- netpbm


def read_netpbm(path):
    """Read a binary PGM (P5) or PPM (P6) image with maxval <= 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P5", b"P6") or maxval > 255:
        raise ValueError(f"{path}: only 8-bit binary PGM/PPM images are supported")
    channels = 3 if magic == b"P6" else 1
    pixels = np.frombuffer(data[pos + 1 : pos + 1 + width * height * channels], dtype=np.uint8)
    if pixels.size != width * height * channels:
        raise ValueError(f"{path}: truncated image data")
    shape = (height, width, 3) if channels == 3 else (height, width)
    return pixels.reshape(shape).copy()


def write_netpbm(path, image):
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ValueError("only uint8 images can be written")
    if image.ndim == 2:
        magic = b"P5"
    elif image.ndim == 3 and image.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot write image of shape {image.shape}")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + f"\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(image).tobytes())
