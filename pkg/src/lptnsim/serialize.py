"""Versioned JSON containers for states and compiled channels.

Tensor payloads are raw little-endian complex128 bytes, base64-encoded, with
shapes recorded alongside; the container is plain JSON so checkpoints stay
binary-free and portable.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .lptn_state import ErrorLedger, LptnState, TruncationEvent
from .tensor_core import DenseTensor, as_tensor

FORMAT_STATE = "lptn-state"
FORMAT_CHANNEL = "kraus-channel"
VERSION = 1


def _encode_array(t: DenseTensor) -> dict:
    t = as_tensor(t)
    return {
        "shape": list(t.shape),
        "data": base64.b64encode(t.astype("<c16").tobytes()).decode("ascii"),
    }


def _decode_array(entry: dict) -> DenseTensor:
    raw = base64.b64decode(entry["data"])
    arr = np.frombuffer(raw, dtype="<c16").astype(np.complex128)
    return as_tensor(arr.reshape(entry["shape"]))


def state_to_dict(state: LptnState) -> dict:
    led = state.ledger
    return {
        "format": FORMAT_STATE,
        "version": VERSION,
        "local_dims": state.local_dims,
        "center": state.center,
        "tensors": [_encode_array(t) for t in state.tensors],
        "ledger": {
            "events": [[e.layer, e.site, e.axis, e.delta] for e in led.events],
            "accumulated_two_norm": led.accumulated_two_norm,
            "delta_max": led.delta_max,
            "layer_count": led.layer_count,
        },
    }


def state_from_dict(doc: dict) -> LptnState:
    if doc.get("format") != FORMAT_STATE:
        raise ValidationError(f"not a state container: format={doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise ValidationError(f"unsupported container version {doc.get('version')!r}")
    led_doc = doc.get("ledger", {})
    ledger = ErrorLedger(
        events=[TruncationEvent(int(l), int(s), str(a), float(d))
                for l, s, a, d in led_doc.get("events", [])],
        accumulated_two_norm=float(led_doc.get("accumulated_two_norm", 0.0)),
        delta_max=float(led_doc.get("delta_max", 0.0)),
        layer_count=int(led_doc.get("layer_count", 0)),
    )
    center = doc.get("center")
    return LptnState(
        [_decode_array(t) for t in doc["tensors"]],
        center=None if center is None else int(center),
        ledger=ledger,
    )


def save_state(state: LptnState, path: str | Path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state)))


def load_state(path: str | Path) -> LptnState:
    return state_from_dict(json.loads(Path(path).read_text()))


def channel_to_dict(kraus_ops: list[DenseTensor], meta: dict | None = None) -> dict:
    """Dump a compiled Kraus set (with an optional build report) for inspection."""
    return {
        "format": FORMAT_CHANNEL,
        "version": VERSION,
        "kraus_ops": [_encode_array(b) for b in kraus_ops],
        "meta": meta or {},
    }


def channel_from_dict(doc: dict) -> list[DenseTensor]:
    if doc.get("format") != FORMAT_CHANNEL:
        raise ValidationError(f"not a channel container: format={doc.get('format')!r}")
    return [_decode_array(b) for b in doc["kraus_ops"]]
