#!/usr/bin/env python3
"""Mock predictor bridge for protocol tests.

Implements the newline-delimited JSON wire contract with a trivial
deterministic model (intensity band around the first positive point).
Deliberately self-contained: no engine imports, so it doubles as an
independent check of the protocol documentation.

Env knobs: MOCK_PROTOCOL overrides the advertised protocol version.
"""

import base64
import json
import os
import sys
import time

PREDICTORS = [
    {
        "id": "mock-image", "family": "sam-image", "variant": "vit-b",
        "capabilities": {
            "supports_box": True, "supports_sequence": False,
            "supports_negative_points": True,
        },
    },
    {
        "id": "mock-video", "family": "sam2-video", "variant": "tiny",
        "capabilities": {
            "supports_box": False, "supports_sequence": True,
            "supports_negative_points": True,
        },
    },
]
BAND = 16

embeddings = {}
sequences = {}
counters = {"emb": 0, "seq": 0}


def decode_image(image):
    rows, cols = int(image["rows"]), int(image["cols"])
    pixels = base64.b64decode(image["pixels_b64"])
    if len(pixels) != rows * cols:
        raise ValueError("pixel payload does not match dims")
    grid = [list(pixels[r * cols:(r + 1) * cols]) for r in range(rows)]
    return rows, cols, grid


def rle(bits_flat):
    runs = []
    value = 0
    run = 0
    for bit in bits_flat:
        bit = 1 if bit else 0
        if bit == value:
            run += 1
        else:
            runs.append(run)
            value = bit
            run = 1
    runs.append(run)
    return runs


def band_mask(rows, cols, grid, seed_value):
    flat = []
    for r in range(rows):
        for c in range(cols):
            flat.append(abs(grid[r][c] - seed_value) <= BAND)
    return flat


def predictor_by_id(pid):
    for p in PREDICTORS:
        if p["id"] == pid:
            return p
    return None


def handle_predict(msg):
    pred = predictor_by_id(msg.get("predictor"))
    if pred is None:
        return {"error": "unknown_predictor", "message": str(msg.get("predictor"))}
    if msg.get("sleep_ms"):
        time.sleep(msg["sleep_ms"] / 1000.0)
    emb = embeddings.get(msg.get("embedding_id"))
    if emb is None:
        return {"error": "unknown_embedding", "message": str(msg.get("embedding_id"))}
    if msg.get("box") and not pred["capabilities"]["supports_box"]:
        return {"error": "unsupported_prompt", "message": "box not supported"}
    rows, cols, grid = emb
    points = msg.get("points") or []
    positives = [p for p in points if p[2] == 1]
    if positives:
        seed = grid[positives[0][0]][positives[0][1]]
        flat = band_mask(rows, cols, grid, seed)
    elif msg.get("box"):
        r0, c0, r1, c1 = msg["box"]
        flat = [(r0 <= r <= r1 and c0 <= c <= c1)
                for r in range(rows) for c in range(cols)]
    else:
        return {"error": "bad_request", "message": "no positive point or box"}
    return {"mask_rle": rle(flat), "rows": rows, "cols": cols}


def seq_targets(frames_count, prompted, direction):
    if direction == "right":
        return list(range(min(prompted), frames_count))
    if direction == "left":
        return list(range(0, max(prompted) + 1))
    return list(range(frames_count))


def handle_seq_run(msg, out):
    seq = sequences.get(msg.get("seq"))
    if seq is None:
        emit(out, {"error": "bad_request", "message": "unknown sequence"})
        return
    if not seq["prompts"]:
        emit(out, {"error": "no_prompted_slices", "message": "prompt a frame first"})
        return
    direction = msg.get("direction", "both")
    prompted = sorted(seq["prompts"])
    targets = seq_targets(len(seq["frames"]), prompted, direction)

    def nearest(t):
        if direction == "right":
            pool = [s for s in prompted if s <= t]
        elif direction == "left":
            pool = [s for s in prompted if s >= t]
        else:
            pool = prompted
        return min(pool, key=lambda s: (abs(t - s), s))

    for t in sorted(targets, key=lambda t: (abs(t - nearest(t)), t)):
        root = nearest(t)
        rows, cols, grid = seq["frames"][t]
        _, _, root_grid = seq["frames"][root]
        point = seq["prompts"][root][0]
        seed = root_grid[point[0]][point[1]]
        flat = band_mask(rows, cols, grid, seed)
        emit(out, {"slice": t, "mask_rle": rle(flat)})
    emit(out, {"done": True})


def emit(out, obj):
    out.write(json.dumps(obj) + "\n")
    out.flush()


def main():
    protocol = int(os.environ.get("MOCK_PROTOCOL", "1"))
    out = sys.stdout
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except ValueError:
            emit(out, {"error": "bad_request", "message": "not json"})
            continue
        op = msg.get("op")
        try:
            if op == "hello":
                emit(out, {"predictors": PREDICTORS, "protocol": protocol})
            elif op == "encode":
                if predictor_by_id(msg.get("predictor")) is None:
                    emit(out, {"error": "unknown_predictor",
                               "message": str(msg.get("predictor"))})
                    continue
                counters["emb"] += 1
                emb_id = f"emb-{counters['emb']}"
                embeddings[emb_id] = decode_image(msg["image"])
                emit(out, {"embedding_id": emb_id})
            elif op == "predict":
                emit(out, handle_predict(msg))
            elif op == "seq_open":
                pred = predictor_by_id(msg.get("predictor"))
                if pred is None:
                    emit(out, {"error": "unknown_predictor",
                               "message": str(msg.get("predictor"))})
                    continue
                if not pred["capabilities"]["supports_sequence"]:
                    emit(out, {"error": "sequence_unsupported",
                               "message": msg.get("predictor")})
                    continue
                counters["seq"] += 1
                seq_id = f"seq-{counters['seq']}"
                sequences[seq_id] = {
                    "frames": [decode_image(f) for f in msg["frames"]],
                    "prompts": {},
                }
                emit(out, {"seq": seq_id})
            elif op == "seq_prompt":
                seq = sequences.get(msg.get("seq"))
                if seq is None:
                    emit(out, {"error": "bad_request", "message": "unknown sequence"})
                    continue
                frame = int(msg.get("frame", -1))
                if not 0 <= frame < len(seq["frames"]):
                    emit(out, {"error": "bad_request", "message": "frame out of range"})
                    continue
                if msg.get("box"):
                    emit(out, {"error": "unsupported_prompt",
                               "message": "video predictor takes points only"})
                    continue
                points = msg.get("points") or []
                if not any(p[2] == 1 for p in points):
                    emit(out, {"error": "bad_request", "message": "need a positive point"})
                    continue
                seq["prompts"][frame] = [p for p in points if p[2] == 1]
                emit(out, {"ok": True})
            elif op == "seq_run":
                handle_seq_run(msg, out)
            elif op == "seq_reset":
                seq = sequences.get(msg.get("seq"))
                if seq is None:
                    emit(out, {"error": "bad_request", "message": "unknown sequence"})
                    continue
                seq["prompts"] = {}
                emit(out, {"ok": True})
            elif op == "die":
                os._exit(1)
            else:
                emit(out, {"error": "unsupported_op", "message": str(op)})
        except Exception as exc:  # never crash the loop
            emit(out, {"error": "bad_request", "message": str(exc)})


if __name__ == "__main__":
    main()
