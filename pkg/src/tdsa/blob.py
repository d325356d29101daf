"""JSON header + little-endian float64 block container for model parameters.

Layout: ``uint64`` header length, UTF-8 JSON header, then each array listed in
``header["arrays"]`` as contiguous little-endian float64 values in order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

MAGIC = 'tdsa-blob-1'


def write_blob(path: Union[str, Path], header: dict, arrays: dict) -> None:
    header = dict(header, magic=MAGIC,
                  arrays=[{'name': name, 'shape': list(np.shape(value))}
                          for name, value in arrays.items()])
    encoded = json.dumps(header, sort_keys=True).encode('utf-8')
    with open(path, 'wb') as handle:
        handle.write(struct.pack('<Q', len(encoded)))
        handle.write(encoded)
        for value in arrays.values():
            handle.write(np.ascontiguousarray(value, dtype='<f8').tobytes())


def read_blob(path: Union[str, Path]) -> tuple[dict, dict]:
    data = Path(path).read_bytes()
    (length,) = struct.unpack_from('<Q', data, 0)
    header = json.loads(data[8:8 + length].decode('utf-8'))
    if header.get('magic') != MAGIC:
        raise ValueError(f'{path}: not a tdsa parameter file')
    offset = 8 + length
    arrays = {}
    for entry in header['arrays']:
        count = int(np.prod(entry['shape'], dtype=np.int64))
        block = np.frombuffer(data, dtype='<f8', count=count, offset=offset)
        arrays[entry['name']] = block.astype(np.float64).reshape(entry['shape'])
        offset += 8 * count
    if offset != len(data):
        raise ValueError(f'{path}: {len(data) - offset} trailing bytes')
    return header, arrays
