"""Grayscale images: PGM input/output, bilinear sampling, warping, rotation.

Images are (height, width) float64 arrays with values in [0, 1]. Pixel
(row r, column c) sits at position (x, y) = (c, r); displacement vectors are
(dx, dy) in pixel units. All sampling outside the image clamps to the
nearest pixel (Neumann boundary handling).
"""

from dataclasses import dataclass

import numpy as np

from .errors import PgmFormatError


@dataclass(frozen=True)
class Image:
    """A single-channel image with float values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("image values must be a (height, width) array")
        if not np.all(np.isfinite(v)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def channels(self):
        return 1


def _values(image):
    return image.values if isinstance(image, Image) else np.asarray(image, dtype=np.float64)


# -- PGM (P5) ------------------------------------------------------------------


def _read_pgm_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise PgmFormatError("unexpected end of PGM header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise PgmFormatError("unterminated comment in PGM header")
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    return tokens, pos + 1  # skip the single whitespace after maxval


def load_pgm(path):
    """Load a binary (P5) PGM file, scaling sample values into [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise PgmFormatError("%s: not a binary PGM (P5) file" % path)
    tokens, offset = _read_pgm_tokens(data[2:], 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PgmFormatError("%s: malformed PGM header" % path) from None
    if width < 1 or height < 1:
        raise PgmFormatError("%s: invalid dimensions %dx%d" % (path, width, height))
    if not 0 < maxval < 65536:
        raise PgmFormatError("%s: maxval %d out of range" % (path, maxval))
    payload = data[2 + offset :]
    dtype = ">u2" if maxval > 255 else "u1"
    expected = width * height * (2 if maxval > 255 else 1)
    if len(payload) < expected:
        raise PgmFormatError("%s: truncated pixel data" % path)
    raw = np.frombuffer(payload[:expected], dtype=dtype).astype(np.float64)
    return Image(raw.reshape(height, width) / maxval)


def save_pgm(image, path, maxval=255):
    """Write an image as binary PGM, quantizing to ``maxval`` levels."""
    v = _values(image)
    if not 0 < maxval < 65536:
        raise ValueError("maxval %d out of range" % maxval)
    q = np.rint(np.clip(v, 0.0, 1.0) * maxval)
    data = q.astype(">u2" if maxval > 255 else "u1").tobytes()
    header = b"P5\n%d %d\n%d\n" % (v.shape[1], v.shape[0], maxval)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


# -- sampling and warping --------------------------------------------------------


def bilinear_sample(image, pos):
    """Bilinear sample at positions (x, y), clamped to the image rectangle.

    ``pos`` has shape (..., 2); the result drops the last axis.
    """
    v = _values(image)
    h, w = v.shape
    pos = np.asarray(pos, dtype=np.float64)
    x = np.clip(pos[..., 0], 0.0, w - 1.0)
    y = np.clip(pos[..., 1], 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = v[y0, x0] * (1.0 - fx) + v[y0, x1] * fx
    bot = v[y1, x0] * (1.0 - fx) + v[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def grid_positions(shape):
    """(n, 2) array of (x, y) pixel positions in C order for an image shape."""
    h, w = shape
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return np.column_stack([xs.ravel(), ys.ravel()]).astype(np.float64)


def warp(template, deformation):
    """Evaluate the template at x + deformation(x) for every pixel x.

    ``deformation`` is (n, 2) in C order or (h, w, 2).
    """
    v = _values(template)
    d = np.asarray(deformation, dtype=np.float64)
    if d.ndim == 3:
        d = d.reshape(-1, 2)
    if d.shape != (v.size, 2):
        raise ValueError("deformation shape %r does not match image" % (d.shape,))
    pos = grid_positions(v.shape) + d
    return Image(bilinear_sample(v, pos).reshape(v.shape))


def rotation_displacement(shape, degrees):
    """Displacement field whose warp rotates image content by ``degrees``.

    The field satisfies rotate(T, degrees) == warp(T, field) up to
    interpolation; rotation is about the image center.
    """
    h, w = shape
    theta = np.deg2rad(degrees)
    rot = np.array(
        [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
    )
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    pos = grid_positions(shape)
    return (pos - center) @ rot.T + center - pos


def synth_rotation(image, degrees):
    """Rotate image content about the center with bilinear resampling."""
    v = _values(image)
    return warp(v, rotation_displacement(v.shape, degrees))


def make_blob_image(shape, seed=0, n_blobs=6, max_offset=None, background=0.1):
    """Deterministic smooth test image: Gaussian blobs near the center."""
    h, w = shape
    rng = np.random.default_rng(seed)
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    if max_offset is None:
        max_offset = 0.3 * min(h, w)
    pos = grid_positions(shape)
    img = np.full(h * w, background)
    for _ in range(n_blobs):
        ang = rng.uniform(0, 2 * np.pi)
        rad = rng.uniform(0.15, 1.0) * max_offset
        mu = center + rad * np.array([np.cos(ang), np.sin(ang)])
        sigma = rng.uniform(0.09, 0.16) * min(h, w)
        amp = rng.uniform(0.35, 0.8)
        d2 = np.sum((pos - mu) ** 2, axis=1)
        img += amp * np.exp(-0.5 * d2 / sigma**2)
    return Image(np.clip(img, 0.0, 1.0).reshape(h, w))


def make_spoke_image(shape, angular=((3, 0.55, 0.7), (4, 0.45, 2.1)),
                     radial_wave=8.0, radial_depth=0.25,
                     taper_radius=None, taper_power=10, amplitude=0.45):
    """Deterministic spoke pattern for rotation experiments.

    A mix of angular harmonics (frequency, weight, phase) modulated by a
    gentle radial wave inside a plateau envelope. Mixed angular frequencies
    leave no rotational symmetry, so only the true rotation aligns the
    pattern with its rotated copy, and a harmonic near half the angular
    period makes small displacements expensive everywhere.
    """
    h, w = shape
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    pos = grid_positions(shape) - center
    r = np.linalg.norm(pos, axis=1)
    theta = np.arctan2(pos[:, 1], pos[:, 0])
    if taper_radius is None:
        taper_radius = 0.36 * min(h, w)
    envelope = np.exp(-((r / taper_radius) ** taper_power))
    ang = sum(wt * np.cos(k * theta + ph) for k, wt, ph in angular)
    rad = (1.0 - radial_depth) + radial_depth * np.cos(2.0 * np.pi * r / radial_wave)
    v = 0.5 + amplitude * envelope * ang * rad
    return Image(np.clip(v, 0.0, 1.0).reshape(h, w))


def make_texture_image(shape, seed=0, smooth=1.6, taper_radius=None, taper_power=4):
    """Deterministic band-limited texture fading out toward the border.

    Smoothed unit noise gives unambiguous local structure for matching; a
    radial envelope sends the intensity to a flat background outside
    ``taper_radius`` so border content does not dominate comparisons.
    """
    from scipy.ndimage import gaussian_filter

    h, w = shape
    rng = np.random.default_rng(seed)
    noise = gaussian_filter(rng.standard_normal((h, w)), smooth, mode="nearest")
    noise /= max(np.abs(noise).max(), 1e-12)
    if taper_radius is None:
        taper_radius = 0.33 * min(h, w)
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    pos = grid_positions(shape)
    r = np.linalg.norm(pos - center, axis=1).reshape(h, w)
    envelope = np.exp(-((r / taper_radius) ** taper_power))
    return Image(np.clip(0.5 + 0.45 * noise * envelope, 0.0, 1.0))
