"""
Checkpoint files: a key=value text header terminated by ``end_header``,
then every parameter array in ``GruNetwork.parameters()`` order as
little-endian float64.
"""
from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from velocity_estimation.core.exceptions import MissingCheckpointError
from velocity_estimation.data.normalization import NormStats
from velocity_estimation.network.gru import GATE_CONVENTION, GruLayerParams, GruNetwork
from velocity_estimation.utils.logging import get_logger

logger = get_logger(__name__)

FORMAT_TAG = "velocity-estimation-gru"
FORMAT_VERSION = "1"
HEADER_END = b"end_header\n"
DTYPE = "<f8"
NORM_KEYS = ("input_mean", "input_std", "output_mean", "output_std")


def _floats(values: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in np.ravel(values))


def save_checkpoint(net: GruNetwork, norm: NormStats, path: Union[str, Path]) -> Path:
    """Write ``net`` and the normalization it was trained with."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    params = net.parameters()
    header = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "gate_convention": GATE_CONVENTION,
        "input_dim": str(net.input_dim),
        "hidden_dims": ",".join(str(h) for h in net.hidden_dims),
        "output_dim": str(net.output_dim),
        "dropout": repr(net.dropout),
        "slope": repr(net.slope),
        "preset": net.preset or "",
        "dtype": DTYPE,
        "params": ";".join(f"{name}:{'x'.join(str(d) for d in p.shape)}" for name, p in params.items()),
    }
    header.update({key: _floats(value) for key, value in norm.to_dict().items()})
    text = "".join(f"{key}={value}\n" for key, value in header.items())
    payload = b"".join(np.ascontiguousarray(p, dtype=DTYPE).tobytes() for p in params.values())
    path.write_bytes(text.encode("utf-8") + HEADER_END + payload)
    logger.info(f"Checkpoint written to {path} ({net.n_parameters()} parameters)")
    return path


def read_header(path: Union[str, Path]) -> Tuple[Dict[str, str], bytes]:
    path = Path(path)
    if not path.exists():
        raise MissingCheckpointError(f"Checkpoint not found: {path}")
    blob = path.read_bytes()
    marker = blob.find(HEADER_END)
    if marker < 0:
        raise ValueError(f"{path} has no '{HEADER_END.decode().strip()}' marker")
    header = {}
    for line in blob[:marker].decode("utf-8").splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
    return header, blob[marker + len(HEADER_END):]


def load_checkpoint(path: Union[str, Path]) -> Tuple[GruNetwork, NormStats]:
    """
    Rebuild the network and its normalization statistics.

    Raises:
        MissingCheckpointError: If the file does not exist
        ValueError: If the header or payload is inconsistent
    """
    header, payload = read_header(path)
    if header.get("format") != FORMAT_TAG:
        raise ValueError(f"{path} is not a {FORMAT_TAG} checkpoint")
    if header.get("gate_convention") != GATE_CONVENTION:
        raise ValueError(f"Unsupported gate convention {header.get('gate_convention')!r}")

    input_dim = int(header["input_dim"])
    hidden_dims = [int(h) for h in header["hidden_dims"].split(",")]
    output_dim = int(header["output_dim"])
    arrays = np.frombuffer(payload, dtype=DTYPE)

    shapes = []
    for entry in header["params"].split(";"):
        name, _, dims = entry.partition(":")
        shapes.append((name, tuple(int(d) for d in dims.split("x"))))
    expected = sum(int(np.prod(shape)) for _, shape in shapes)
    if arrays.size != expected:
        raise ValueError(f"{path} holds {arrays.size} values, header declares {expected}")

    values: Dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in shapes:
        size = int(np.prod(shape))
        values[name] = arrays[offset:offset + size].reshape(shape).astype(float)
        offset += size

    layers = []
    width = input_dim
    for hidden in hidden_dims:
        layers.append(GruLayerParams.zeros(width, hidden))
        width = hidden
    net = GruNetwork(
        layers=layers,
        W_out=np.zeros((output_dim, width)),
        b_out=np.zeros(output_dim),
        dropout=float(header["dropout"]),
        slope=float(header["slope"]),
        preset=header.get("preset") or None,
    )
    net.load_parameters(values)
    norm = NormStats.from_dict({key: [float(v) for v in header[key].split(",")] for key in NORM_KEYS})
    logger.info(f"Loaded checkpoint {path}: layers {net.hidden_dims}")
    return net, norm


def require_checkpoint(path: Optional[Union[str, Path]]) -> Tuple[GruNetwork, NormStats]:
    """Load a checkpoint that a network estimator cannot run without."""
    if path is None:
        raise MissingCheckpointError("A network estimator needs a checkpoint path")
    return load_checkpoint(path)
