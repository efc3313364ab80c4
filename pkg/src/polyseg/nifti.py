"""Minimal NIfTI-1 reader/writer (single-file .nii, optionally gzipped).

Only the header fields this engine needs are interpreted: dims, pixdim,
datatype, scl_slope/scl_inter, and the sform/qform affines. Everything is
parsed directly from the fixed 348-byte header, so there is no dependency
on an external medical-imaging library.
"""

from __future__ import annotations

import gzip
import struct
import warnings

import numpy as np

from .errors import CorruptInput, InvalidMetadata, UnsupportedFormat

HEADER_SIZE = 348

# NIfTI-1 datatype code -> numpy dtype (unscaled, little-endian base)
_DTYPES = {
    2: np.uint8,
    4: np.int16,
    16: np.float32,
    64: np.float64,
    512: np.uint16,
}

_GZIP_MAGIC = b"\x1f\x8b"


def is_gzipped(buf: bytes) -> bool:
    return buf[:2] == _GZIP_MAGIC


def _decompress(buf: bytes) -> bytes:
    try:
        return gzip.decompress(buf)
    except (OSError, EOFError) as exc:
        raise CorruptInput(f"bad gzip stream: {exc}") from exc


def _quaternion_rotation(b: float, c: float, d: float) -> np.ndarray:
    a2 = 1.0 - (b * b + c * c + d * d)
    if a2 < -1e-4:
        raise ValueError("quaternion norm exceeds 1")
    a = np.sqrt(max(a2, 0.0))
    return np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )


def _orthonormal(m: np.ndarray, tol: float = 1e-4) -> bool:
    return bool(np.allclose(m.T @ m, np.eye(3), atol=tol))


def read_nifti(buf: bytes):
    """Parse a NIfTI-1 byte stream.

    Returns (dims, spacing, origin, direction, data) with data as float32
    in x-fastest order, scl_slope/scl_inter already applied. Affine priority:
    sform when valid, else qform, else spacing-diagonal.
    """
    if is_gzipped(buf):
        buf = _decompress(buf)
    if len(buf) < HEADER_SIZE:
        raise CorruptInput(f"stream shorter than NIfTI-1 header ({len(buf)} bytes)")

    (sizeof_hdr,) = struct.unpack_from("<i", buf, 0)
    if sizeof_hdr == 348:
        bo = "<"
    elif struct.unpack_from(">i", buf, 0)[0] == 348:
        bo = ">"
    else:
        raise CorruptInput("not a NIfTI-1 stream (sizeof_hdr != 348)")

    magic = buf[344:348]
    if magic not in (b"n+1\x00", b"ni1\x00"):
        raise CorruptInput("bad NIfTI-1 magic")
    if magic == b"ni1\x00":
        raise UnsupportedFormat("paired .hdr/.img NIfTI files are not supported")

    dim = struct.unpack_from(bo + "8h", buf, 40)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise CorruptInput(f"invalid dim[0]={ndim}")
    if ndim > 3 and any(d > 1 for d in dim[4 : ndim + 1]):
        raise UnsupportedFormat("multi-volume (4D+) NIfTI is not supported")
    dims = tuple(int(dim[i]) if i <= ndim else 1 for i in (1, 2, 3))
    if any(d < 1 for d in dims):
        raise InvalidMetadata(f"nonpositive dimension in {dims}")

    (datatype,) = struct.unpack_from(bo + "h", buf, 70)
    if datatype not in _DTYPES:
        raise UnsupportedFormat(f"NIfTI datatype code {datatype} not supported")
    dtype = np.dtype(_DTYPES[datatype]).newbyteorder(bo)

    pixdim = struct.unpack_from(bo + "8f", buf, 76)
    spacing = tuple(float(pixdim[i]) for i in (1, 2, 3))
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise InvalidMetadata(f"nonpositive voxel spacing {spacing}")

    (vox_offset,) = struct.unpack_from(bo + "f", buf, 108)
    offset = int(round(vox_offset))
    if offset < HEADER_SIZE:
        offset = HEADER_SIZE
    slope, inter = struct.unpack_from(bo + "2f", buf, 112)

    nvox = dims[0] * dims[1] * dims[2]
    nbytes = nvox * dtype.itemsize
    if len(buf) < offset + nbytes:
        raise CorruptInput(
            f"truncated voxel payload: need {offset + nbytes} bytes, have {len(buf)}"
        )
    raw = np.frombuffer(buf, dtype=dtype, count=nvox, offset=offset)
    data = np.ascontiguousarray(raw.reshape(dims, order="F"), dtype=np.float32)
    if slope != 0.0 and not (slope == 1.0 and inter == 0.0):
        data = data * np.float32(slope) + np.float32(inter)

    qform_code, sform_code = struct.unpack_from(bo + "2h", buf, 252)
    spacing_out, origin, direction = _affine_from_header(
        buf, bo, spacing, qform_code, sform_code, float(pixdim[0])
    )
    return dims, spacing_out, origin, direction, data


def _affine_from_header(buf, bo, spacing, qform_code, sform_code, qfac):
    if sform_code > 0:
        srow = np.array(
            [
                struct.unpack_from(bo + "4f", buf, 280),
                struct.unpack_from(bo + "4f", buf, 296),
                struct.unpack_from(bo + "4f", buf, 312),
            ],
            dtype=np.float64,
        )
        m = srow[:, :3]
        norms = np.linalg.norm(m, axis=0)
        if np.all(norms > 1e-12):
            direction = m / norms
            if _orthonormal(direction):
                return tuple(norms), tuple(srow[:, 3]), direction
        warnings.warn("NIfTI sform is not orthogonal; trying qform")
    if qform_code > 0:
        b, c, d = struct.unpack_from(bo + "3f", buf, 256)
        qoffset = struct.unpack_from(bo + "3f", buf, 268)
        try:
            rot = _quaternion_rotation(b, c, d)
        except ValueError:
            warnings.warn("NIfTI qform quaternion invalid; using spacing-diagonal affine")
        else:
            if qfac == 0.0:
                qfac = 1.0
            rot = rot.copy()
            rot[:, 2] *= np.sign(qfac)
            if _orthonormal(rot):
                return spacing, tuple(float(x) for x in qoffset), rot
            warnings.warn("NIfTI qform is not orthogonal; using spacing-diagonal affine")
    return spacing, (0.0, 0.0, 0.0), np.eye(3)


def write_nifti_u8(dims, spacing, origin, direction, data: np.ndarray) -> bytes:
    """Serialize a uint8 volume as a single-file NIfTI-1 stream (sform affine)."""
    if data.shape != tuple(dims):
        raise InvalidMetadata("data shape does not match dims")
    hdr = bytearray(352)  # 348-byte header + 4-byte extension flag (zeros)
    struct.pack_into("<i", hdr, 0, 348)
    struct.pack_into("<8h", hdr, 40, 3, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, 2)  # uint8
    struct.pack_into("<h", hdr, 72, 8)  # bitpix
    struct.pack_into("<8f", hdr, 76, 1.0, spacing[0], spacing[1], spacing[2], 0, 0, 0, 0)
    struct.pack_into("<f", hdr, 108, 352.0)
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)  # scl_slope, scl_inter
    hdr[123] = 2  # xyzt_units: millimetres
    struct.pack_into("<2h", hdr, 252, 0, 1)  # qform off, sform aligned
    m = np.asarray(direction, dtype=np.float64) * np.asarray(spacing, dtype=np.float64)
    struct.pack_into("<4f", hdr, 280, m[0, 0], m[0, 1], m[0, 2], origin[0])
    struct.pack_into("<4f", hdr, 296, m[1, 0], m[1, 1], m[1, 2], origin[1])
    struct.pack_into("<4f", hdr, 312, m[2, 0], m[2, 1], m[2, 2], origin[2])
    hdr[344:348] = b"n+1\x00"
    payload = np.ascontiguousarray(data, dtype=np.uint8).ravel(order="F").tobytes()
    return bytes(hdr) + payload
