"""Protocol conformance suite for predictor bridges.

Drives a bridge process over raw newline-delimited JSON (independently of
the BridgeClient) and checks framing, handshake, error behavior, sequence
reset semantics, and stream termination. Returns a list of failure
strings; an empty list means the bridge conforms.
"""

from __future__ import annotations

import base64
import json
import shlex
import subprocess

from ..annotation.mask import rle_decode
from ..errors import RunSumMismatch
from .base import PredictorDescriptor

ROWS, COLS = 4, 4


def _image(seed: int) -> dict:
    pixels = bytes(((r * COLS + c) * 16 + seed) % 256
                   for r in range(ROWS) for c in range(COLS))
    return {
        "rows": ROWS, "cols": COLS,
        "pixels_b64": base64.b64encode(pixels).decode("ascii"),
    }


class _Channel:
    def __init__(self, command):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1,
        )

    def request(self, obj: dict) -> dict:
        self.proc.stdin.write(json.dumps(obj) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if line == "":
            raise RuntimeError("bridge closed the stream")
        return json.loads(line)

    def stream(self, obj: dict, max_frames: int = 10000) -> list[dict]:
        self.proc.stdin.write(json.dumps(obj) + "\n")
        self.proc.stdin.flush()
        frames = []
        for _ in range(max_frames):
            line = self.proc.stdout.readline()
            if line == "":
                raise RuntimeError("stream ended without a done frame")
            frame = json.loads(line)
            if frame.get("done"):
                return frames
            if "error" in frame:
                raise RuntimeError(f"error frame in stream: {frame}")
            frames.append(frame)
        raise RuntimeError("stream never terminated")

    def close(self):
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()


def run_conformance(command) -> list[str]:
    failures: list[str] = []
    chan = _Channel(command)
    try:
        _check(chan, failures)
    except Exception as exc:
        failures.append(f"conformance aborted: {exc}")
    finally:
        chan.close()
    return failures


def _check(chan: _Channel, failures: list[str]):
    hello = chan.request({"op": "hello"})
    if hello.get("protocol") != 1:
        failures.append(f"hello protocol != 1: {hello.get('protocol')!r}")
        return
    descriptors = []
    for payload in hello.get("predictors", []):
        try:
            descriptors.append(PredictorDescriptor.from_dict(payload))
        except (KeyError, TypeError, ValueError) as exc:
            failures.append(f"invalid descriptor {payload!r}: {exc}")

    # unknown op: error frame, channel stays usable
    frame = chan.request({"op": "definitely_not_an_op"})
    if "error" not in frame:
        failures.append(f"unknown op did not error: {frame}")
    if chan.request({"op": "hello"}).get("protocol") != 1:
        failures.append("channel unusable after an unknown op")

    # unknown predictor: error frame
    frame = chan.request({
        "op": "encode", "predictor": "no-such-predictor", "image": _image(0),
    })
    if "error" not in frame:
        failures.append(f"encode for unknown predictor did not error: {frame}")

    for descriptor in descriptors:
        _check_image_ops(chan, descriptor, failures)
        if descriptor.capabilities.supports_sequence:
            _check_sequence_ops(chan, descriptor, failures)


def _decodable(frame: dict, where: str, failures: list[str]) -> bool:
    try:
        rle_decode(frame["mask_rle"], ROWS, COLS)
        return True
    except (KeyError, TypeError, RunSumMismatch) as exc:
        failures.append(f"{where}: mask not decodable: {exc}")
        return False


def _check_image_ops(chan: _Channel, descriptor: PredictorDescriptor,
                     failures: list[str]):
    pid = descriptor.id
    frame = chan.request({"op": "encode", "predictor": pid, "image": _image(1)})
    if "embedding_id" not in frame:
        failures.append(f"{pid}: encode response missing embedding_id: {frame}")
        return
    emb = frame["embedding_id"]

    frame = chan.request({
        "op": "predict", "predictor": pid, "embedding_id": emb,
        "points": [[1, 1, 1]],
    })
    if "error" in frame:
        failures.append(f"{pid}: point predict errored: {frame}")
    else:
        if frame.get("rows") != ROWS or frame.get("cols") != COLS:
            failures.append(f"{pid}: predict dims mismatch: {frame}")
        _decodable(frame, f"{pid}: predict", failures)

    if not descriptor.capabilities.supports_box:
        frame = chan.request({
            "op": "predict", "predictor": pid, "embedding_id": emb,
            "points": [[1, 1, 1]], "box": [0, 0, 2, 2],
        })
        if frame.get("error") != "unsupported_prompt":
            failures.append(
                f"{pid}: box to a boxless predictor must error "
                f"unsupported_prompt, got {frame}"
            )

    frame = chan.request({
        "op": "predict", "predictor": pid,
        "embedding_id": "no-such-embedding", "points": [[1, 1, 1]],
    })
    if frame.get("error") != "unknown_embedding":
        failures.append(f"{pid}: stale embedding must error unknown_embedding, got {frame}")


def _check_sequence_ops(chan: _Channel, descriptor: PredictorDescriptor,
                        failures: list[str]):
    pid = descriptor.id
    frame = chan.request({
        "op": "seq_open", "predictor": pid,
        "frames": [_image(i) for i in range(3)],
    })
    if "seq" not in frame:
        failures.append(f"{pid}: seq_open missing seq id: {frame}")
        return
    seq = frame["seq"]

    # run before any prompt must refuse
    try:
        chan.stream({"op": "seq_run", "seq": seq, "direction": "both"})
        failures.append(f"{pid}: seq_run without prompts did not error")
    except RuntimeError as exc:
        if "no_prompted_slices" not in str(exc):
            failures.append(f"{pid}: wrong error for unprompted run: {exc}")

    frame = chan.request({
        "op": "seq_prompt", "seq": seq, "frame": 0, "points": [[1, 1, 1]],
    })
    if "error" in frame:
        failures.append(f"{pid}: seq_prompt errored: {frame}")
        return

    frames = chan.stream({"op": "seq_run", "seq": seq, "direction": "both"})
    indices = [f.get("slice") for f in frames]
    if sorted(indices) != [0, 1, 2]:
        failures.append(f"{pid}: run both must emit each frame once, got {indices}")
    for f in frames:
        _decodable(f, f"{pid}: seq_run", failures)

    # reset forgets old prompts; a new prompt drives a directional run
    frame = chan.request({"op": "seq_reset", "seq": seq})
    if "error" in frame:
        failures.append(f"{pid}: seq_reset errored: {frame}")
    try:
        chan.stream({"op": "seq_run", "seq": seq, "direction": "both"})
        failures.append(f"{pid}: run after reset with no prompts did not error")
    except RuntimeError as exc:
        if "no_prompted_slices" not in str(exc):
            failures.append(f"{pid}: wrong error after reset: {exc}")

    chan.request({
        "op": "seq_prompt", "seq": seq, "frame": 2, "points": [[1, 1, 1]],
    })
    frames = chan.stream({"op": "seq_run", "seq": seq, "direction": "right"})
    indices = [f.get("slice") for f in frames]
    if indices != [2]:
        failures.append(
            f"{pid}: after reset+prompt(2), run right must emit exactly [2], "
            f"got {indices}"
        )
