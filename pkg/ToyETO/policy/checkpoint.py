import json
import struct
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from core import Vocabulary

from .errors import CheckpointError
from .params import Architecture, PolicyParams

MAGIC: bytes = b"TOYETO\x00\x01"


def save_checkpoint(path: Union[str, Path], params: PolicyParams, vocab: Vocabulary) -> Path:
    """Function that writes the parameters as a small JSON header followed by little-endian float64 values

    Parameters

    path : Union[str, Path]
        file to write

    params : PolicyParams
        parameters to persist

    vocab : Vocabulary
        vocabulary the policy was trained on. Its hash is stored in the header

    Returns

    Path
        returns the path that was written
    """
    if params.arch.vocab_size != len(vocab):
        raise CheckpointError(
            f"The policy has {params.arch.vocab_size} output tokens but the vocabulary has {len(vocab)}"
        )

    header: bytes = json.dumps(
        {"arch": params.arch.to_dict(), "vocab_hash": vocab.vocab_hash, "n_params": params.arch.n_params},
        sort_keys=True,
    ).encode("utf-8")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, "wb") as checkpoint:
        checkpoint.write(MAGIC)
        checkpoint.write(struct.pack("<I", len(header)))
        checkpoint.write(header)
        checkpoint.write(params.theta.astype("<f8").tobytes())

    return path


def load_checkpoint(path: Union[str, Path], vocab: Vocabulary) -> PolicyParams:
    """reads a checkpoint and verifies it belongs to the vocabulary"""
    try:
        raw: bytes = Path(path).read_bytes()
    except FileNotFoundError:
        raise CheckpointError(f"There is no checkpoint at {path}") from None

    if not raw.startswith(MAGIC) or len(raw) < len(MAGIC) + 4:
        raise CheckpointError(f"The file {path} is not a policy checkpoint")

    offset: int = len(MAGIC)
    (header_size,) = struct.unpack("<I", raw[offset:offset + 4])
    offset += 4

    try:
        header: Dict[str, Any] = json.loads(raw[offset:offset + header_size].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise CheckpointError(f"The header of {path} is not readable: {error}") from None

    offset += header_size

    if header.get("vocab_hash") != vocab.vocab_hash:
        raise CheckpointError(f"The checkpoint {path} was written for a different vocabulary")

    arch = Architecture.from_dict(header["arch"])
    values: bytes = raw[offset:]

    if arch.n_params != header.get("n_params") or len(values) != 8 * arch.n_params:
        raise CheckpointError(
            f"The checkpoint {path} should hold {arch.n_params} parameters but has {len(values) // 8}"
        )

    return PolicyParams(arch, np.frombuffer(values, dtype="<f8").astype(np.float64))
