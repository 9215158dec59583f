"""Versioned binary container for trained models.

Layout (little-endian throughout):

    bytes 0..7    magic b"SPEMODL\\0"
    bytes 8..11   format version (uint32)
    bytes 12..15  header length in bytes (uint32)
    header        UTF-8 JSON: kind, model version, params, dims, and an array
                  directory (name, shape, complex flag, element count)
    payload       the arrays in directory order as IEEE-754 float64; complex
                  arrays are stored as interleaved (real, imag) doubles

Loading rejects wrong magic, wrong container version, and model-version or
kind mismatches.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SPEMODL\x00"
CONTAINER_VERSION = 1


@dataclass
class ModelRecord:
    kind: str
    version: int
    params: dict
    dims: dict
    arrays: dict


def save_model(path, kind: str, version: int, params: dict, dims: dict, arrays: dict) -> None:
    directory = []
    payload = bytearray()
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        is_complex = np.iscomplexobj(arr)
        arr = arr.astype(np.complex128 if is_complex else np.float64)
        directory.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "complex": is_complex,
                "doubles": arr.size * (2 if is_complex else 1),
            }
        )
        payload.extend(arr.astype("<c16" if is_complex else "<f8").tobytes())
    header = json.dumps(
        {
            "kind": kind,
            "version": version,
            "params": params,
            "dims": dims,
            "arrays": directory,
        }
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", CONTAINER_VERSION, len(header)))
        fh.write(header)
        fh.write(payload)


def load_model(path, expect_kind: str | None = None, expect_version: int | None = None) -> ModelRecord:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a model file: bad magic in {path}")
        container_version, header_len = struct.unpack("<II", fh.read(8))
        if container_version != CONTAINER_VERSION:
            raise ValueError(
                f"unsupported container version {container_version} "
                f"(expected {CONTAINER_VERSION})"
            )
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            dtype = "<c16" if entry["complex"] else "<f8"
            count = entry["doubles"] // (2 if entry["complex"] else 1)
            buf = fh.read(count * (16 if entry["complex"] else 8))
            arrays[entry["name"]] = np.frombuffer(buf, dtype=dtype).reshape(entry["shape"]).copy()
    if expect_kind is not None and header["kind"] != expect_kind:
        raise ValueError(f"model kind mismatch: file is '{header['kind']}', need '{expect_kind}'")
    if expect_version is not None and header["version"] != expect_version:
        raise ValueError(
            f"model version mismatch: file is {header['version']}, need {expect_version}"
        )
    return ModelRecord(
        kind=header["kind"],
        version=header["version"],
        params=header["params"],
        dims=header["dims"],
        arrays=arrays,
    )
