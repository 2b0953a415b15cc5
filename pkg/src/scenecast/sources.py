"""Frame producers for every source kind.

Each producer is a pure function of its configuration and a frame index,
so scripted sessions replay bit-identically. OS capture is replaced by a
directory-polling stub; decoders reject malformed input instead of
guessing.

File formats: binary PPM (P6, 8-bit), PAM (RGB / RGB_ALPHA, 8-bit) and
YUV4MPEG2 with I420 chroma.
"""

from __future__ import annotations

import os
import re
import threading
from dataclasses import dataclass

import numpy as np

from .font_data import FONT_HEIGHT, FONT_WIDTH, GLYPHS
from .raster import RGBA, FrameBuffer


class SourceError(ValueError):
    """Raised for unreadable files, malformed headers, or bad parameters."""


# ---------------------------------------------------------------------------
# Still images: PPM (P6) and PAM

def load_image(path: str | os.PathLike) -> FrameBuffer:
    """Load a binary PPM or PAM file into an RGBA frame (PPM alpha = 255)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise SourceError(f"source unreadable: {path}: {exc}") from exc
    return decode_image(data, name=str(path))


def decode_image(data: bytes, name: str = "<bytes>") -> FrameBuffer:
    if data.startswith(b"P6"):
        return _decode_ppm(data, name)
    if data.startswith(b"P7"):
        return _decode_pam(data, name)
    raise SourceError(f"{name}: unsupported magic {data[:2]!r}")


def _decode_ppm(data: bytes, name: str) -> FrameBuffer:
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and '#' comments between header tokens
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise SourceError(f"{name}: truncated header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise SourceError(f"{name}: bad header field") from exc
    if maxval != 255:
        raise SourceError(f"{name}: unsupported depth (maxval {maxval})")
    if width < 1 or height < 1:
        raise SourceError(f"{name}: bad dimensions {width}x{height}")
    need = width * height * 3
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise SourceError(f"{name}: truncated payload")
    rgb = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    out = np.empty((height, width, 4), dtype=np.uint8)
    out[:, :, :3] = rgb
    out[:, :, 3] = 255
    return FrameBuffer(width, height, out)


def _decode_pam(data: bytes, name: str) -> FrameBuffer:
    end = data.find(b"ENDHDR\n")
    if end < 0:
        raise SourceError(f"{name}: missing ENDHDR")
    header = data[:end].decode("ascii", errors="replace")
    attrs: dict[str, str] = {}
    for line in header.splitlines()[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        attrs[key] = value.strip()
    try:
        width = int(attrs["WIDTH"])
        height = int(attrs["HEIGHT"])
        depth = int(attrs["DEPTH"])
        maxval = int(attrs["MAXVAL"])
    except (KeyError, ValueError) as exc:
        raise SourceError(f"{name}: bad PAM header") from exc
    if maxval != 255:
        raise SourceError(f"{name}: unsupported depth (maxval {maxval})")
    if depth not in (3, 4):
        raise SourceError(f"{name}: unsupported PAM depth {depth}")
    if width < 1 or height < 1:
        raise SourceError(f"{name}: bad dimensions {width}x{height}")
    body = data[end + len(b"ENDHDR\n") :]
    need = width * height * depth
    if len(body) < need:
        raise SourceError(f"{name}: truncated payload")
    px = np.frombuffer(body[:need], dtype=np.uint8).reshape(height, width, depth)
    if depth == 4:
        out = px.copy()
    else:
        out = np.empty((height, width, 4), dtype=np.uint8)
        out[:, :, :3] = px
        out[:, :, 3] = 255
    return FrameBuffer(width, height, np.ascontiguousarray(out))


# ---------------------------------------------------------------------------
# YUV -> RGB (BT.601 limited range, integer arithmetic)

def yuv_to_rgba(y: int, u: int, v: int) -> RGBA:
    """Convert one limited-range BT.601 YUV sample to RGBA (alpha 255)."""
    c = y - 16
    d = u - 128
    e = v - 128
    r = (298 * c + 409 * e + 128) >> 8
    g = (298 * c - 100 * d - 208 * e + 128) >> 8
    b = (298 * c + 516 * d + 128) >> 8
    clip = lambda x: 0 if x < 0 else (255 if x > 255 else x)
    return (clip(r), clip(g), clip(b), 255)


def _yuv_planes_to_rgba(yp: np.ndarray, up: np.ndarray, vp: np.ndarray) -> np.ndarray:
    """Vectorized version of yuv_to_rgba over full I420 planes."""
    h, w = yp.shape
    u_full = np.repeat(np.repeat(up, 2, axis=0), 2, axis=1)[:h, :w]
    v_full = np.repeat(np.repeat(vp, 2, axis=0), 2, axis=1)[:h, :w]
    c = yp.astype(np.int32) - 16
    d = u_full.astype(np.int32) - 128
    e = v_full.astype(np.int32) - 128
    r = (298 * c + 409 * e + 128) >> 8
    g = (298 * c - 100 * d - 208 * e + 128) >> 8
    b = (298 * c + 516 * d + 128) >> 8
    out = np.empty((h, w, 4), dtype=np.uint8)
    out[:, :, 0] = np.clip(r, 0, 255)
    out[:, :, 1] = np.clip(g, 0, 255)
    out[:, :, 2] = np.clip(b, 0, 255)
    out[:, :, 3] = 255
    return out


# ---------------------------------------------------------------------------
# Video files: YUV4MPEG2, I420

_I420_TAGS = {"420", "420jpeg", "420mpeg2", "420paldv"}


class VideoSource:
    """A parsed Y4M clip; frames convert to RGBA on demand.

    frame_index past the end loops back to frame 0 when loop=True
    (default), otherwise freezes on the last frame.
    """

    def __init__(self, path: str | os.PathLike, loop: bool = True):
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise SourceError(f"source unreadable: {path}: {exc}") from exc
        self.path = str(path)
        self.loop = loop
        self._parse(data)
        self._cache: tuple[int, FrameBuffer] | None = None

    def _parse(self, data: bytes) -> None:
        nl = data.find(b"\n")
        if nl < 0 or not data.startswith(b"YUV4MPEG2"):
            raise SourceError(f"{self.path}: bad magic, expected YUV4MPEG2")
        header = data[:nl].decode("ascii", errors="replace")
        width = height = 0
        chroma = "420"
        for token in header.split()[1:]:
            if token.startswith("W"):
                width = int(token[1:])
            elif token.startswith("H"):
                height = int(token[1:])
            elif token.startswith("C"):
                chroma = token[1:]
        if chroma not in _I420_TAGS:
            raise SourceError(f"{self.path}: unsupported chroma C{chroma}")
        if width < 1 or height < 1:
            raise SourceError(f"{self.path}: bad dimensions {width}x{height}")
        self.width, self.height = width, height
        frame_size = width * height * 3 // 2
        self._frames: list[bytes] = []
        pos = nl + 1
        while pos < len(data):
            fnl = data.find(b"\n", pos)
            if fnl < 0 or not data[pos:fnl].startswith(b"FRAME"):
                raise SourceError(f"{self.path}: bad frame marker at byte {pos}")
            start = fnl + 1
            payload = data[start : start + frame_size]
            if len(payload) != frame_size:
                raise SourceError(f"{self.path}: truncated frame {len(self._frames)}")
            self._frames.append(payload)
            pos = start + frame_size
        if not self._frames:
            raise SourceError(f"{self.path}: no frames")

    @property
    def natural_size(self) -> tuple[int, int]:
        return (self.width, self.height)

    @property
    def frame_count(self) -> int:
        return len(self._frames)

    def frame(self, frame_index: int) -> FrameBuffer:
        n = len(self._frames)
        idx = frame_index % n if self.loop else min(max(frame_index, 0), n - 1)
        if self._cache is not None and self._cache[0] == idx:
            return self._cache[1]
        w, h = self.width, self.height
        raw = self._frames[idx]
        yp = np.frombuffer(raw[: w * h], dtype=np.uint8).reshape(h, w)
        half = (w // 2) * (h // 2)
        up = np.frombuffer(raw[w * h : w * h + half], dtype=np.uint8).reshape(h // 2, w // 2)
        vp = np.frombuffer(raw[w * h + half :], dtype=np.uint8).reshape(h // 2, w // 2)
        fb = FrameBuffer(w, h, _yuv_planes_to_rgba(yp, up, vp))
        self._cache = (idx, fb)
        return fb


def open_video(path: str | os.PathLike, loop: bool = True) -> VideoSource:
    return VideoSource(path, loop=loop)


def next_frame(video: VideoSource, frame_index: int) -> FrameBuffer:
    return video.frame(frame_index)


# ---------------------------------------------------------------------------
# Synthetic patterns

_COLORBARS: tuple[RGBA, ...] = (
    (255, 255, 255, 255),
    (255, 255, 0, 255),
    (0, 255, 255, 255),
    (0, 255, 0, 255),
    (255, 0, 255, 255),
    (255, 0, 0, 255),
    (0, 0, 255, 255),
    (0, 0, 0, 255),
)


@dataclass(frozen=True)
class PatternSpec:
    variant: str  # colorbars | checkerboard | solid
    width: int
    height: int
    colors: tuple[RGBA, ...] = ((255, 255, 255, 255), (0, 0, 0, 255))
    cell: int = 8
    counter_overlay: bool = False
    cadence: int = 30  # frames per checkerboard phase step

    def __post_init__(self) -> None:
        if self.variant not in ("colorbars", "checkerboard", "solid"):
            raise SourceError(f"unknown pattern variant {self.variant!r}")
        if self.width < 1 or self.height < 1:
            raise SourceError("pattern size must be >= 1x1")
        if self.cell < 1:
            raise SourceError("pattern cell size must be >= 1")
        if self.cadence < 1:
            raise SourceError("pattern cadence must be >= 1")
        if self.variant == "checkerboard" and len(self.colors) < 2:
            raise SourceError("checkerboard needs two colors")
        if self.variant == "solid" and len(self.colors) < 1:
            raise SourceError("solid needs one color")


def _pattern_phase(spec: PatternSpec, frame_index: int) -> int:
    if spec.variant == "checkerboard" and spec.counter_overlay:
        return (frame_index // spec.cadence) % 2
    return 0


def _pattern_base(spec: PatternSpec, phase: int) -> np.ndarray:
    w, h = spec.width, spec.height
    px = np.empty((h, w, 4), dtype=np.uint8)
    if spec.variant == "solid":
        px[:, :] = spec.colors[0]
    elif spec.variant == "checkerboard":
        xs = np.arange(w) // spec.cell
        ys = np.arange(h) // spec.cell
        parity = ((xs[None, :] + ys[:, None] + phase) % 2).astype(np.uint8)
        palette = np.array([spec.colors[0], spec.colors[1]], dtype=np.uint8)
        px[:, :] = palette[parity]
    else:  # colorbars
        for i, color in enumerate(_COLORBARS):
            x0 = i * w // 8
            x1 = (i + 1) * w // 8
            px[:, x0:x1] = color
    return px


def pattern_frame(spec: PatternSpec, frame_index: int) -> FrameBuffer:
    """Render one pattern frame; pure in (spec, frame_index)."""
    px = _pattern_base(spec, _pattern_phase(spec, frame_index))
    if spec.counter_overlay:
        _stamp_counter(px, frame_index)
    return FrameBuffer(spec.width, spec.height, px)


def _stamp_counter(px: np.ndarray, frame_index: int) -> None:
    """Draw the frame index as white-on-black text in the top-left corner."""
    label = render_text(str(frame_index), (255, 255, 255, 255), (0, 0, 0, 255))
    h = min(label.height, px.shape[0])
    w = min(label.width, px.shape[1])
    px[:h, :w] = label.pixels[:h, :w]


# ---------------------------------------------------------------------------
# Text rendering with the embedded font

def render_text(text: str, fg: RGBA, bg: RGBA) -> FrameBuffer:
    """Rasterize ASCII text: 8x8 glyphs, 1 px cell padding, 1 px border.

    Output size is (len(text) * 9 + 1) x 10 pixels.
    """
    for ch in text:
        if not (32 <= ord(ch) <= 126):
            raise SourceError(f"unsupported code point {ch!r}")
    width = len(text) * (FONT_WIDTH + 1) + 1
    height = FONT_HEIGHT + 2
    px = np.empty((height, width, 4), dtype=np.uint8)
    px[:, :] = bg
    for i, ch in enumerate(text):
        rows = GLYPHS[ord(ch)]
        x0 = 1 + i * (FONT_WIDTH + 1)
        for row, bits in enumerate(rows):
            for col in range(FONT_WIDTH):
                if bits & (0x80 >> col):
                    px[1 + row, x0 + col] = fg
    return FrameBuffer(width, height, px)


def text_frame(text: str, fg: RGBA, bg: RGBA) -> FrameBuffer:
    return render_text(text, fg, bg)


# ---------------------------------------------------------------------------
# Capture stub: a directory of numbered stills standing in for a live window

_NUMBERED = re.compile(r"^(\d+)\.(ppm|pam)$")


def _scan_stub_dir(directory: str | os.PathLike) -> list[str]:
    try:
        names = os.listdir(directory)
    except OSError as exc:
        raise SourceError(f"capture stub directory unreadable: {directory}: {exc}") from exc
    numbered = sorted(
        (name for name in names if _NUMBERED.match(name)),
        key=lambda name: int(_NUMBERED.match(name).group(1)),
    )
    if not numbered:
        raise SourceError(f"capture stub directory is empty: {directory}")
    return numbered


def capture_stub_poll(directory: str | os.PathLike, frame_index: int) -> FrameBuffer:
    """Return numbered file floor(frame_index), clamped to the newest file.

    The directory is re-scanned on every call so another process can drop
    in new frames while a session runs.
    """
    names = _scan_stub_dir(directory)
    idx = min(max(int(frame_index), 0), len(names) - 1)
    return load_image(os.path.join(directory, names[idx]))


class CaptureStubSource:
    def __init__(self, directory: str | os.PathLike):
        self.directory = str(directory)
        self._lock = threading.Lock()
        first = capture_stub_poll(directory, 0)
        self.natural_size = (first.width, first.height)

    def frame(self, frame_index: int) -> FrameBuffer:
        with self._lock:
            return capture_stub_poll(self.directory, frame_index)


class ImageSource:
    def __init__(self, path: str | os.PathLike):
        self._frame = load_image(path)
        self.natural_size = (self._frame.width, self._frame.height)

    def frame(self, frame_index: int) -> FrameBuffer:
        return self._frame


class PatternSource:
    """pattern_frame plus caching: static variants render once, and the
    per-frame counter overlay stamps onto a cached base copy."""

    def __init__(self, spec: PatternSpec):
        self.spec = spec
        self.natural_size = (spec.width, spec.height)
        self._static: FrameBuffer | None = None
        self._base: tuple[int, np.ndarray] | None = None

    def frame(self, frame_index: int) -> FrameBuffer:
        spec = self.spec
        if not spec.counter_overlay:
            if self._static is None:
                self._static = pattern_frame(spec, frame_index)
            return self._static
        phase = _pattern_phase(spec, frame_index)
        if self._base is None or self._base[0] != phase:
            self._base = (phase, _pattern_base(spec, phase))
        px = self._base[1].copy()
        _stamp_counter(px, frame_index)
        return FrameBuffer(spec.width, spec.height, px)


class TextSource:
    def __init__(self, text: str, fg: RGBA, bg: RGBA):
        self._frame = render_text(text, fg, bg)
        self.natural_size = (self._frame.width, self._frame.height)

    def frame(self, frame_index: int) -> FrameBuffer:
        return self._frame


def _as_color(value, default: RGBA) -> RGBA:
    if value is None:
        return default
    items = tuple(int(v) for v in value)
    if len(items) == 3:
        items = items + (255,)
    if len(items) != 4 or any(not (0 <= v <= 255) for v in items):
        raise SourceError(f"bad color {value!r}")
    return items  # type: ignore[return-value]


def open_source(kind: str, params: dict, assets_root: str | None = None):
    """Instantiate the producer for a source descriptor; validates params."""

    def resolve(path: str) -> str:
        if assets_root is not None and not os.path.isabs(path):
            return os.path.join(assets_root, path)
        return path

    if kind == "image":
        if "path" not in params:
            raise SourceError("image source needs a path")
        return ImageSource(resolve(params["path"]))
    if kind == "video":
        if "path" not in params:
            raise SourceError("video source needs a path")
        return VideoSource(resolve(params["path"]), loop=bool(params.get("loop", True)))
    if kind == "pattern":
        colors = params.get("colors")
        kwargs = dict(
            variant=params.get("variant", "colorbars"),
            width=int(params.get("width", 320)),
            height=int(params.get("height", 240)),
            cell=int(params.get("cell", 8)),
            counter_overlay=bool(params.get("counter_overlay", False)),
            cadence=int(params.get("cadence", 30)),
        )
        if colors:
            kwargs["colors"] = tuple(_as_color(c, (0, 0, 0, 255)) for c in colors)
        return PatternSource(PatternSpec(**kwargs))
    if kind == "text":
        if "text" not in params:
            raise SourceError("text source needs a text string")
        fg = _as_color(params.get("fg"), (255, 255, 255, 255))
        bg = _as_color(params.get("bg"), (0, 0, 0, 255))
        return TextSource(params["text"], fg, bg)
    if kind == "capture-stub":
        if "dir" not in params:
            raise SourceError("capture-stub source needs a dir")
        return CaptureStubSource(resolve(params["dir"]))
    raise SourceError(f"unknown source kind {kind!r}")
