import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from app import settings
from app.services.errors import CheckpointFormatError, CheckpointMismatchError
from app.services.state import RunDirectory
from .parameters import ParameterSet


logger = logging.getLogger(__name__)


BYTE_ORDER_DTYPE = "<f8"


def encode_checkpoint(params: ParameterSet, hyper: Optional[Dict[str, Any]] = None, seed: int = 0,
                      extra: Optional[Dict[str, Any]] = None) -> bytes:
    """
    Tag line, one JSON metadata line, then every tensor as little-endian float64 in
    ParameterSet field order.
    """
    metadata = {
        "seed": seed,
        "hyperparams": hyper or {},
        "tensors": [{"name": name, "shape": list(array.shape)} for name, array in params.items()],
        "extra": extra or {},
    }
    header = f"{settings.CHECKPOINT_FORMAT_TAG}\n{json.dumps(metadata, sort_keys=True, default=str)}\n"
    body = b"".join(np.ascontiguousarray(array, dtype=BYTE_ORDER_DTYPE).tobytes() for _, array in params.items())
    return header.encode("utf-8") + body


def decode_checkpoint(data: bytes, source="<bytes>") -> Tuple[ParameterSet, Dict[str, Any]]:
    tag_end = data.find(b"\n")
    meta_end = data.find(b"\n", tag_end + 1)
    if tag_end < 0 or meta_end < 0 or data[:tag_end].decode("utf-8", "replace") != settings.CHECKPOINT_FORMAT_TAG:
        raise CheckpointFormatError(f"{source} is not a '{settings.CHECKPOINT_FORMAT_TAG}' checkpoint.")
    try:
        metadata = json.loads(data[tag_end + 1:meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"{source} has an unreadable metadata line: {e}") from e

    arrays = {}
    offset = meta_end + 1
    for spec in metadata.get("tensors", []):
        shape = tuple(spec["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        size = count * 8
        if offset + size > len(data):
            raise CheckpointFormatError(f"{source} is truncated inside tensor '{spec['name']}'.")
        arrays[spec["name"]] = np.frombuffer(data, dtype=BYTE_ORDER_DTYPE, count=count, offset=offset) \
            .astype(np.float64).reshape(shape)
        offset += size
    if offset != len(data):
        raise CheckpointFormatError(f"{source} has {len(data) - offset} trailing bytes.")
    missing = set(ParameterSet.names()) - set(arrays)
    if missing:
        raise CheckpointFormatError(f"{source} lacks tensors {sorted(missing)}.")
    return ParameterSet(**{name: arrays[name] for name in ParameterSet.names()}), metadata


def save_checkpoint(target, params: ParameterSet, hyper: Optional[Dict[str, Any]] = None, seed: int = 0,
                    extra: Optional[Dict[str, Any]] = None, filename: str = None):
    """``target`` is a RunDirectory or a directory path."""
    directory = target if isinstance(target, RunDirectory) else RunDirectory(target)
    directory.write_bytes(filename or settings.CHECKPOINT_FILENAME, encode_checkpoint(params, hyper, seed, extra))


def load_checkpoint(path) -> Tuple[ParameterSet, Dict[str, Any]]:
    path = Path(path)
    if path.is_dir():
        path = path / settings.CHECKPOINT_FILENAME
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"Checkpoint {path} cannot be read: {e}") from e
    params, metadata = decode_checkpoint(data, source=path)
    logger.info(f"Loaded checkpoint {path} (d={params.dim}, nodes={params.node_count}, seed={metadata.get('seed')}).")
    return params, metadata


def check_compatible(params: ParameterSet, node_count: int, relation_count: int, dim: int, n_queries: int):
    expected = {"nodes": node_count, "relations": relation_count, "d": dim, "queries": n_queries}
    found = {"nodes": params.node_count, "relations": params.relation_count, "d": params.dim, "queries": params.n_queries}
    wrong = {key: (found[key], value) for key, value in expected.items() if found[key] != value}
    if wrong:
        detail = ", ".join(f"{key} {got} != {want}" for key, (got, want) in wrong.items())
        raise CheckpointMismatchError(f"Checkpoint does not fit the configured model: {detail}.")
