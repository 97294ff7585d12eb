"""
Versioned weight container.

    magic "CFGEVWT\\0" | u32 format version | u32 header length | header JSON
    then, per tensor in header order: u32 ndim | u64 dims... | float64 data (row-major)

All integers and floats little-endian. The header carries the ModelConfig
and the tensor names; shapes must match a model built from that config.
"""
import json
import logging
import os
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import torch

from ..common.exceptions import ConfigurationError, CorruptFileError, VersionMismatchError
from .encoder import ModelConfig, SequenceClassifier

logger = logging.getLogger(__name__)

MAGIC = b"CFGEVWT\x00"
FORMAT_VERSION = 1


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CorruptFileError(f"truncated at byte {self.offset} (wanted {n} more)")
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def save_params(model: SequenceClassifier) -> bytes:
    state = model.state_dict()
    header = json.dumps({"config": model.config.to_dict(), "tensors": list(state)}).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(header)), header]
    for tensor in state.values():
        array = tensor.detach().cpu().to(torch.float64).numpy()
        parts.append(struct.pack("<I", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(parts)


def load_params(data: bytes) -> SequenceClassifier:
    """
    Raises:
        VersionMismatchError for an unknown format version
        CorruptFileError for bad magic, truncation, trailing bytes or shape mismatches
    """
    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CorruptFileError("bad magic")
    version, header_len = reader.unpack("<II")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(version, FORMAT_VERSION)
    try:
        header = json.loads(reader.take(header_len).decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        names = list(header["tensors"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ConfigurationError) as e:
        raise CorruptFileError(f"unreadable header ({e})")

    model = SequenceClassifier.initialize(config, seed=0)
    expected = model.state_dict()
    if names != list(expected):
        raise CorruptFileError("tensor names do not match the configured architecture")

    loaded = {}
    for name in names:
        (ndim,) = reader.unpack("<I")
        shape = reader.unpack(f"<{ndim}Q")
        if tuple(shape) != tuple(expected[name].shape):
            raise CorruptFileError(f"{name}: shape {tuple(shape)} != configured {tuple(expected[name].shape)}")
        count = int(np.prod(shape, dtype=np.int64))
        array = np.frombuffer(reader.take(8 * count), dtype="<f8").reshape(shape)
        loaded[name] = torch.from_numpy(array.astype(np.float64))
    if reader.offset != len(data):
        raise CorruptFileError(f"{len(data) - reader.offset} trailing bytes")

    model.load_state_dict(loaded)
    model.eval()
    return model


def save_model(model: SequenceClassifier, path: Union[str, os.PathLike]):
    Path(path).write_bytes(save_params(model))
    logger.info("Model saved to %s", path)


def load_model(path: Union[str, os.PathLike]) -> SequenceClassifier:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Weight file not found: {path}")
    return load_params(path.read_bytes())
