"""Binary checkpoint format.

Layout, all integers little-endian::

    magic        8 bytes   b"CCNNCKP1"
    desc_len     uint32
    descriptor   desc_len bytes, UTF-8 JSON from ModelSpec.descriptor()
    n_arrays     uint32
    n_arrays times:
        name_len uint16, name (UTF-8, e.g. "0.w")
        ndim     uint32, then ndim x uint32 dims
        data     prod(dims) x float32 (little-endian, C order)

Arrays are written in ``Model.params`` order.
"""
import struct

import numpy as np

from candlecnn.ioutil import atomic_write_bytes
from candlecnn.nn.model import Model, ModelSpec

MAGIC = b"CCNNCKP1"


class CheckpointError(ValueError):
    pass


class SpecMismatch(CheckpointError):
    pass


def dumps(model):
    desc = model.spec.descriptor().encode("utf-8")
    parts = [MAGIC, struct.pack("<I", len(desc)), desc]
    params = model.params
    parts.append(struct.pack("<I", len(params)))
    for name, arr in params.items():
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(parts)


def save(path, model):
    atomic_write_bytes(path, dumps(model))


def loads(data, expected_spec=None, dtype=np.float32):
    try:
        return _loads(memoryview(data), expected_spec, dtype)
    except CheckpointError:
        raise
    except (struct.error, ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc


def _loads(view, expected_spec, dtype):
    if bytes(view[:8]) != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    pos = 8

    def take(fmt):
        nonlocal pos
        vals = struct.unpack_from(fmt, view, pos)
        pos += struct.calcsize(fmt)
        return vals

    (dlen,) = take("<I")
    desc = bytes(view[pos:pos + dlen]).decode("utf-8")
    pos += dlen
    spec = ModelSpec.from_descriptor(desc)
    if expected_spec is not None and expected_spec.descriptor() != desc:
        raise SpecMismatch("checkpoint was saved for a different model spec")
    (count,) = take("<I")
    arrays = {}
    for _ in range(count):
        (nlen,) = take("<H")
        name = bytes(view[pos:pos + nlen]).decode("utf-8")
        pos += nlen
        (ndim,) = take("<I")
        shape = take(f"<{ndim}I")
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(view, dtype="<f4", count=size, offset=pos).reshape(shape)
        pos += 4 * size
    if pos != len(view):
        raise CheckpointError("trailing bytes after last array")
    model = Model(spec, dtype=dtype)
    if arrays.keys() != model.params.keys():
        raise SpecMismatch("checkpoint arrays do not match the model spec's parameters")
    model.set_params(arrays)
    return model


def load(path, expected_spec=None, dtype=np.float32):
    with open(path, "rb") as fh:
        return loads(fh.read(), expected_spec, dtype)
