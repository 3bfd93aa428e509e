"""Disk persistence for uploaded volumes and annotation sessions.

Volumes keep their original bytes (content-addressed by digest prefix).
Sessions are JSON snapshots plus one RLE file per stored mask, rewritten
on every committed mutation and reloaded wholesale at startup.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

from .annotation.mask import MaskSlice, rle_decode, rle_encode
from .annotation.prompts import BoxPrompt, PointPrompt, Polarity, PromptSet
from .annotation.session import ConditionalSlice, Session
from .errors import UnknownSession, UnknownVolume
from .volume.io import load_volume
from .volume.model import Axis, Volume, content_digest


def _write_json(path: Path, payload: dict):
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, indent=1))
    tmp.replace(path)


class VolumeStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._volumes: dict[str, Volume] = {}
        self._meta: dict[str, dict] = {}
        for meta_path in sorted(self.root.glob("*.json")):
            try:
                meta = json.loads(meta_path.read_text())
                self._meta[meta["volume_id"]] = meta
            except (OSError, ValueError, KeyError):
                continue

    def put(self, raw: bytes, format: str = "auto") -> dict:
        volume = load_volume(raw, format)
        digest = content_digest(volume)
        volume_id = digest[:16]
        with self._lock:
            if volume_id not in self._meta:
                (self.root / f"{volume_id}.bin").write_bytes(raw)
                meta = {
                    "volume_id": volume_id,
                    "digest": digest,
                    "dims": list(volume.dims),
                    "spacing": list(volume.spacing),
                    "intensity_range": list(volume.intensity_range),
                }
                _write_json(self.root / f"{volume_id}.json", meta)
                self._meta[volume_id] = meta
            self._volumes[volume_id] = volume
            return self._meta[volume_id]

    def get(self, volume_id: str) -> Volume:
        with self._lock:
            if volume_id in self._volumes:
                return self._volumes[volume_id]
            path = self.root / f"{volume_id}.bin"
            if volume_id not in self._meta or not path.exists():
                raise UnknownVolume(f"no volume {volume_id!r}")
            volume = load_volume(path.read_bytes())
            self._volumes[volume_id] = volume
            return volume

    def meta(self, volume_id: str) -> dict:
        with self._lock:
            try:
                return self._meta[volume_id]
            except KeyError:
                raise UnknownVolume(f"no volume {volume_id!r}") from None


def _prompts_to_json(prompts: PromptSet) -> dict:
    payload: dict = {
        "points": [
            {"row": p.row, "col": p.col, "polarity": p.polarity.value}
            for p in prompts.points
        ]
    }
    if prompts.box is not None:
        b = prompts.box
        payload["box"] = [b.r0, b.c0, b.r1, b.c1]
    return payload


def _prompts_from_json(slice_index: int, payload: dict) -> PromptSet:
    points = tuple(
        PointPrompt(row=p["row"], col=p["col"], polarity=Polarity(p["polarity"]))
        for p in payload.get("points", [])
    )
    box = None
    if payload.get("box"):
        r0, c0, r1, c1 = payload["box"]
        box = BoxPrompt(r0=r0, c0=c0, r1=r1, c1=c1)
    return PromptSet(slice_index=slice_index, points=points, box=box)


class SessionStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._sessions: dict[str, Session] = {}
        for session_dir in sorted(self.root.iterdir()):
            if (session_dir / "session.json").exists():
                try:
                    session = self._load(session_dir)
                    self._sessions[session.session_id] = session
                except (OSError, ValueError, KeyError):
                    continue

    def create(self, **kwargs) -> Session:
        session = Session(session_id=uuid.uuid4().hex[:12], **kwargs)
        with self._lock:
            self._sessions[session.session_id] = session
        self.persist(session)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(f"no session {session_id!r}") from None

    def all(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())

    def persist(self, session: Session):
        session_dir = self.root / session.session_id
        masks_dir = session_dir / "masks"
        masks_dir.mkdir(parents=True, exist_ok=True)
        with session.lock:
            wanted: set[str] = set()
            conditional = {}
            for index, entry in session.conditional.items():
                mask_file = None
                if entry.mask is not None:
                    mask_file = f"cond_{index}.json"
                    wanted.add(mask_file)
                    self._write_mask(masks_dir / mask_file, entry.mask)
                conditional[str(index)] = {
                    "prompts": _prompts_to_json(entry.prompts),
                    "mask": mask_file,
                }
            propagated = {}
            for index, mask in session.propagated.items():
                mask_file = f"prop_{index}.json"
                wanted.add(mask_file)
                self._write_mask(masks_dir / mask_file, mask)
                propagated[str(index)] = mask_file
            payload = {
                "session_id": session.session_id,
                "volume_id": session.volume_id,
                "volume_digest": session.volume_digest,
                "dims": list(session.dims),
                "axis": session.axis.value,
                "label_id": session.label_id,
                "predictor_id": session.predictor_id,
                "window": session.window,
                "level": session.level,
                "revision": session.revision,
                "conditional": conditional,
                "propagated": propagated,
                "edited": sorted(session.edited),
            }
        for stale in masks_dir.glob("*.json"):
            if stale.name not in wanted:
                stale.unlink(missing_ok=True)
        _write_json(session_dir / "session.json", payload)

    @staticmethod
    def _write_mask(path: Path, mask: MaskSlice):
        _write_json(path, {
            "rows": mask.rows, "cols": mask.cols, "runs": rle_encode(mask),
        })

    @staticmethod
    def _read_mask(path: Path) -> MaskSlice:
        payload = json.loads(path.read_text())
        return rle_decode(payload["runs"], payload["rows"], payload["cols"])

    def _load(self, session_dir: Path) -> Session:
        payload = json.loads((session_dir / "session.json").read_text())
        session = Session(
            session_id=payload["session_id"],
            volume_id=payload["volume_id"],
            volume_digest=payload["volume_digest"],
            dims=tuple(payload["dims"]),
            axis=Axis(payload["axis"]),
            label_id=payload["label_id"],
            predictor_id=payload["predictor_id"],
            window=payload["window"],
            level=payload["level"],
        )
        masks_dir = session_dir / "masks"
        for index_str, entry in payload.get("conditional", {}).items():
            index = int(index_str)
            prompts = _prompts_from_json(index, entry["prompts"])
            mask = None
            if entry.get("mask"):
                mask = self._read_mask(masks_dir / entry["mask"])
            session.conditional[index] = ConditionalSlice(prompts=prompts, mask=mask)
        for index_str, mask_file in payload.get("propagated", {}).items():
            session.propagated[int(index_str)] = self._read_mask(masks_dir / mask_file)
        session.edited = set(payload.get("edited", []))
        session.revision = int(payload.get("revision", 0))
        session.audit()
        return session
