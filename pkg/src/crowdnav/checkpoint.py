"""Flat binary checkpoint container with a JSON manifest.

Layout: 8-byte magic, little-endian u64 manifest length, the manifest
JSON (sorted keys), then raw array bytes concatenated in sorted-name
order. No timestamps or compression, so save -> load -> save is
byte-identical.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

MAGIC = b"CNCKPT01"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Corrupt container or a shape/name mismatch on load."""


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray], manifest: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = sorted(arrays)
    index = []
    offset = 0
    chunks = []
    for name in names:
        arr = np.ascontiguousarray(arrays[name])
        data = arr.tobytes()
        index.append(
            {
                "name": name,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(data),
            }
        )
        chunks.append(data)
        offset += len(data)

    header = {"format_version": FORMAT_VERSION, "arrays": index, "manifest": manifest}
    encoded = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(encoded)))
        fh.write(encoded)
        for chunk in chunks:
            fh.write(chunk)
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < 16 or blob[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint container")
    (manifest_len,) = struct.unpack("<Q", blob[8:16])
    try:
        header = json.loads(blob[16 : 16 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt manifest: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format {header.get('format_version')}")

    body = blob[16 + manifest_len :]
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(body):
            raise CheckpointError(f"{path}: truncated array {entry['name']!r}")
        arr = np.frombuffer(body[start : start + nbytes], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return arrays, header["manifest"]


# ---------------------------------------------------------------------------
# Torch-side packing helpers


def network_arrays(nets: torch.nn.Module, prefix: str = "param.") -> dict[str, np.ndarray]:
    return {
        prefix + name: p.detach().cpu().numpy().copy()
        for name, p in nets.named_parameters()
    }


def load_network_arrays(
    nets: torch.nn.Module, arrays: dict[str, np.ndarray], prefix: str = "param."
) -> None:
    with torch.no_grad():
        for name, p in nets.named_parameters():
            key = prefix + name
            if key not in arrays:
                raise CheckpointError(f"checkpoint is missing parameter {name!r}")
            value = arrays[key]
            if tuple(value.shape) != tuple(p.shape):
                raise CheckpointError(
                    f"parameter {name!r}: checkpoint shape {tuple(value.shape)} "
                    f"does not match model shape {tuple(p.shape)}"
                )
            tensor = torch.from_numpy(value)
            if tensor.dtype != p.dtype:
                raise CheckpointError(
                    f"parameter {name!r}: checkpoint dtype {tensor.dtype} "
                    f"does not match model dtype {p.dtype}"
                )
            p.copy_(tensor)


def optimizer_arrays(
    opt: torch.optim.Adam,
    named_params: list[tuple[str, torch.nn.Parameter]],
    prefix: str,
) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for name, param in named_params:
        state = opt.state.get(param)
        if not state:
            continue
        for key in ("step", "exp_avg", "exp_avg_sq"):
            tensor = state[key]
            if not isinstance(tensor, torch.Tensor):
                tensor = torch.tensor(float(tensor))
            out[f"{prefix}{name}.{key}"] = tensor.detach().cpu().numpy().copy()
    return out


def load_optimizer_arrays(
    opt: torch.optim.Adam,
    named_params: list[tuple[str, torch.nn.Parameter]],
    prefix: str,
    arrays: dict[str, np.ndarray],
) -> None:
    for name, param in named_params:
        step_key = f"{prefix}{name}.step"
        if step_key not in arrays:
            continue
        state: dict[str, torch.Tensor] = {}
        for key in ("step", "exp_avg", "exp_avg_sq"):
            full = f"{prefix}{name}.{key}"
            if full not in arrays:
                raise CheckpointError(f"optimizer state incomplete for {name!r} ({key})")
            state[key] = torch.as_tensor(arrays[full])
        if tuple(state["exp_avg"].shape) != tuple(param.shape):
            raise CheckpointError(
                f"optimizer state for {name!r}: shape {tuple(state['exp_avg'].shape)} "
                f"does not match parameter shape {tuple(param.shape)}"
            )
        opt.state[param] = state
