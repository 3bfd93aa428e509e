"""Client for external predictor bridges speaking newline-delimited JSON.

The bridge is a child process on stdio. Requests and responses are single
JSON lines; sequence runs stream one line per mask and terminate with a
``{"done": true}`` line. Error responses are ``{"error": code, "message"}``.

Message reference (request -> response):

- ``{"op":"hello"}`` -> ``{"predictors":[descriptor...], "protocol":1}``
- ``{"op":"encode","predictor":id,"image":{rows,cols,pixels_b64}}``
  -> ``{"embedding_id":str}``
- ``{"op":"predict","predictor":id,"embedding_id":str,
  "points":[[row,col,polarity]...], "box":[r0,c0,r1,c1]?}``
  -> ``{"mask_rle":[...],"rows":int,"cols":int}``  (polarity: 1 pos, 0 neg)
- ``{"op":"seq_open","predictor":id,"frames":[image...]}`` -> ``{"seq":str}``
- ``{"op":"seq_prompt","seq":str,"frame":int,"points":...,"box":...}``
  -> ``{"ok":true}``
- ``{"op":"seq_run","seq":str,"direction":"both|left|right"}``
  -> stream of ``{"slice":int,"mask_rle":[...]}`` then ``{"done":true}``
- ``{"op":"seq_reset","seq":str}`` -> ``{"ok":true}``
"""

from __future__ import annotations

import base64
import json
import logging
import shlex
import subprocess
import threading
from typing import Iterator

from ..annotation.mask import MaskSlice, rle_decode
from ..annotation.prompts import Polarity, PromptSet
from ..errors import (
    BridgeUnavailable,
    ComputeFailed,
    NoPromptedSlices,
    ProtocolError,
    SequenceUnsupported,
    StaleEmbedding,
    UnsupportedPrompt,
)
from ..volume.model import SliceImage
from .base import ImagePredictor, PredictorDescriptor, SequenceHandle

log = logging.getLogger("sliceseg.bridge")

PROTOCOL_VERSION = 1

_ERROR_MAP = {
    "unknown_embedding": StaleEmbedding,
    "no_prompted_slices": NoPromptedSlices,
    "unsupported_prompt": UnsupportedPrompt,
    "sequence_unsupported": SequenceUnsupported,
}


def image_payload(img: SliceImage) -> dict:
    return {
        "rows": img.rows,
        "cols": img.cols,
        "pixels_b64": base64.b64encode(img.pixels.tobytes()).decode("ascii"),
    }


def points_payload(prompts: PromptSet) -> list[list[int]]:
    return [
        [p.row, p.col, 1 if p.polarity is Polarity.POSITIVE else 0]
        for p in prompts.points
    ]


def _raise_bridge_error(frame: dict):
    code = str(frame.get("error"))
    message = frame.get("message", code)
    raise _ERROR_MAP.get(code, ComputeFailed)(f"bridge: {message}")


class BridgeClient:
    """Serialized request/response channel to one bridge process."""

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.command = argv
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1,
            )
        except OSError as exc:
            raise BridgeUnavailable(f"cannot launch bridge {argv!r}: {exc}") from exc
        self._lock = threading.RLock()

    def close(self):
        with self._lock:
            if self._proc.poll() is None:
                self._proc.terminate()
                try:
                    self._proc.wait(timeout=5)
                except subprocess.TimeoutExpired:
                    self._proc.kill()

    def _send(self, obj: dict):
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise BridgeUnavailable(f"bridge pipe closed: {exc}") from exc

    def _recv(self) -> dict:
        try:
            line = self._proc.stdout.readline()
        except (OSError, ValueError) as exc:
            raise BridgeUnavailable(f"bridge read failed: {exc}") from exc
        if line == "":
            raise BridgeUnavailable("bridge process ended mid-conversation")
        try:
            frame = json.loads(line)
        except ValueError as exc:
            raise ProtocolError(f"bridge sent non-JSON line: {line[:80]!r}") from exc
        if not isinstance(frame, dict):
            raise ProtocolError(f"bridge frame is not an object: {line[:80]!r}")
        return frame

    def request(self, obj: dict) -> dict:
        with self._lock:
            self._send(obj)
            frame = self._recv()
        if "error" in frame:
            _raise_bridge_error(frame)
        return frame

    def stream(self, obj: dict) -> Iterator[dict]:
        with self._lock:
            self._send(obj)
            while True:
                frame = self._recv()
                if "error" in frame:
                    _raise_bridge_error(frame)
                if frame.get("done"):
                    return
                yield frame

    def handshake(self) -> list[PredictorDescriptor]:
        frame = self.request({"op": "hello"})
        if frame.get("protocol") != PROTOCOL_VERSION:
            raise ProtocolError(
                f"bridge speaks protocol {frame.get('protocol')!r}, "
                f"engine needs {PROTOCOL_VERSION}"
            )
        descriptors = []
        for payload in frame.get("predictors", []):
            try:
                descriptors.append(PredictorDescriptor.from_dict(payload))
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("skipping invalid bridge descriptor %r: %s", payload, exc)
        return descriptors


class BridgePredictor(ImagePredictor):
    def __init__(self, client: BridgeClient, descriptor: PredictorDescriptor):
        self.client = client
        self.descriptor = descriptor

    def _check_prompts(self, prompts: PromptSet):
        caps = self.descriptor.capabilities
        if prompts.box is not None and not caps.supports_box:
            raise UnsupportedPrompt(
                f"predictor {self.descriptor.id!r} does not accept box prompts"
            )
        if prompts.negatives and not caps.supports_negative_points:
            raise UnsupportedPrompt(
                f"predictor {self.descriptor.id!r} does not accept negative points"
            )

    def encode(self, img: SliceImage) -> bytes:
        frame = self.client.request({
            "op": "encode", "predictor": self.descriptor.id,
            "image": image_payload(img),
        })
        try:
            return str(frame["embedding_id"]).encode("utf-8")
        except KeyError:
            raise ProtocolError("encode response missing embedding_id") from None

    def predict(self, blob: bytes, prompts: PromptSet) -> MaskSlice:
        self._check_prompts(prompts)
        message = {
            "op": "predict", "predictor": self.descriptor.id,
            "embedding_id": blob.decode("utf-8"),
            "points": points_payload(prompts),
        }
        if prompts.box is not None:
            b = prompts.box
            message["box"] = [b.r0, b.c0, b.r1, b.c1]
        frame = self.client.request(message)
        return _decode_mask(frame)

    def open_sequence(self, frames: list[SliceImage]) -> "BridgeSequenceHandle":
        if not self.descriptor.capabilities.supports_sequence:
            raise SequenceUnsupported(
                f"predictor {self.descriptor.id!r} has no sequence support"
            )
        frame = self.client.request({
            "op": "seq_open", "predictor": self.descriptor.id,
            "frames": [image_payload(f) for f in frames],
        })
        try:
            seq_id = str(frame["seq"])
        except KeyError:
            raise ProtocolError("seq_open response missing seq") from None
        return BridgeSequenceHandle(self, seq_id, frames[0].rows, frames[0].cols)


class BridgeSequenceHandle(SequenceHandle):
    def __init__(self, predictor: BridgePredictor, seq_id: str, rows: int, cols: int):
        self._predictor = predictor
        self._seq = seq_id
        self._rows = rows
        self._cols = cols

    def add_prompts(self, position: int, prompts: PromptSet):
        self._predictor._check_prompts(prompts)
        message = {
            "op": "seq_prompt", "seq": self._seq, "frame": position,
            "points": points_payload(prompts),
        }
        if prompts.box is not None:
            b = prompts.box
            message["box"] = [b.r0, b.c0, b.r1, b.c1]
        self._predictor.client.request(message)

    def run(self, direction: str) -> Iterator[tuple[int, MaskSlice]]:
        for frame in self._predictor.client.stream({
            "op": "seq_run", "seq": self._seq, "direction": direction,
        }):
            try:
                index = int(frame["slice"])
                runs = frame["mask_rle"]
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"bad stream frame {frame!r}") from exc
            yield index, rle_decode(runs, self._rows, self._cols)

    def reset(self):
        self._predictor.client.request({"op": "seq_reset", "seq": self._seq})


def probe_bridge(command: str | list[str]) -> tuple[BridgeClient, list[BridgePredictor]]:
    """Launch a bridge and return its predictors; raises on handshake failure."""
    client = BridgeClient(command)
    try:
        descriptors = client.handshake()
    except Exception:
        client.close()
        raise
    return client, [BridgePredictor(client, d) for d in descriptors]
