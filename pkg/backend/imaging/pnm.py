"""
PNM I/O Module
Binary PGM (P5) and PPM (P6) reader/writer, maxval 255 only
"""
import logging
from pathlib import Path
from typing import List, Tuple, Union

from backend.imaging.image import Image
from backend.utils.errors import ImageError, PnmParseError

logger = logging.getLogger(__name__)

MAGIC_CHANNELS = {b"P5": 1, b"P6": 3}
WHITESPACE = b" \t\r\n\v\f"


def _read_header(raw: bytes, path: str) -> Tuple[List[bytes], int]:
    """
    Tokenize the four header fields, skipping '#' comments

    Returns:
        (tokens, payload_offset)
    """
    tokens: List[bytes] = []
    pos = 0
    size = len(raw)
    while len(tokens) < 4:
        while pos < size and raw[pos] in WHITESPACE:
            pos += 1
        if pos < size and raw[pos:pos + 1] == b"#":
            while pos < size and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= size:
            names = ["magic", "width", "height", "maxval"]
            raise PnmParseError(names[len(tokens)], "header ends early", path)
        start = pos
        while pos < size and raw[pos] not in WHITESPACE and raw[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(raw[start:pos])
        if len(tokens) == 1 and tokens[0] not in MAGIC_CHANNELS:
            raise PnmParseError("magic", f"unsupported magic {tokens[0][:8]!r}", path)
    # exactly one whitespace byte separates maxval from the raster
    if pos >= size or raw[pos] not in WHITESPACE:
        raise PnmParseError("maxval", "missing whitespace before raster", path)
    return tokens, pos + 1


def _parse_int(token: bytes, field: str, path: str) -> int:
    try:
        value = int(token.decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise PnmParseError(field, f"not an integer: {token[:16]!r}", path) from None
    return value


def decode_pnm(raw: bytes, path: str = "<bytes>") -> Image:
    """Decode P5/P6 bytes into an Image"""
    if len(raw) < 2 or raw[:2] not in MAGIC_CHANNELS:
        raise PnmParseError("magic", f"unsupported magic {raw[:2]!r}", path)
    tokens, offset = _read_header(raw, path)
    channels = MAGIC_CHANNELS[tokens[0]]
    width = _parse_int(tokens[1], "width", path)
    height = _parse_int(tokens[2], "height", path)
    maxval = _parse_int(tokens[3], "maxval", path)
    if width <= 0:
        raise PnmParseError("width", f"must be positive, got {width}", path)
    if height <= 0:
        raise PnmParseError("height", f"must be positive, got {height}", path)
    if maxval != 255:
        raise PnmParseError("maxval", f"unsupported maxval {maxval}", path)

    expected = width * height * channels
    payload = raw[offset:offset + expected]
    if len(payload) < expected:
        raise PnmParseError(
            "payload", f"truncated: expected {expected} bytes, got {len(payload)}", path
        )
    try:
        return Image.from_bytes(payload, width, height, channels)
    except ImageError as e:
        raise PnmParseError("payload", str(e), path) from e


def encode_pnm(img: Image) -> bytes:
    """Encode an Image as P5 (grayscale) or P6 (RGB)"""
    magic = "P5" if img.channels == 1 else "P6"
    header = f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data


def read_pnm(path: Union[str, Path]) -> Image:
    """
    Read a binary PGM/PPM file

    Raises:
        PnmParseError: naming the offending header field or the payload
        OSError: if the file cannot be read
    """
    path = Path(path)
    raw = path.read_bytes()
    img = decode_pnm(raw, str(path))
    logger.debug("read %s: %dx%dx%d", path, img.width, img.height, img.channels)
    return img


def write_pnm(img: Image, path: Union[str, Path]) -> None:
    """Write an image as binary PGM/PPM"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pnm(img))
