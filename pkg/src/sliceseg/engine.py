"""Engine facade: the one place the service and the batch CLI drive.

Handlers stay thin; everything stateful (stores, registry, embedding
cache, job manager) lives here so the HTTP and in-process paths run the
exact same code.
"""

from __future__ import annotations

import logging
from functools import partial

import numpy as np

from .annotation.mask import MaskSlice
from .annotation.prompts import BoxPrompt, PointPrompt, PromptSet
from .annotation.segvolume import SegmentationVolume
from .annotation.session import Session
from .config import EngineConfig
from .errors import (
    FromSliceNotConditional,
    NoConditionalSlices,
    SequenceUnsupported,
    StaleEmbedding,
)
from .native.grow import GrowParams
from .native.predictor import NativePredictor
from .orchestrator.jobs import JobManager, PropagationJob
from .orchestrator.propagation import run_all, run_directional
from .predictor.base import ImagePredictor
from .predictor.bridge import probe_bridge
from .predictor.cache import EmbeddingCache, EmbeddingKey
from .predictor.registry import PredictorRegistry
from .refine.ops import BrushOp, MorphKind, apply_brush, morph
from .store import SessionStore, VolumeStore
from .volume.io import save_labelmap
from .volume.model import Axis, SliceImage, extract_slice
from .volume.render import default_window_level, render_with_defaults

log = logging.getLogger("sliceseg.engine")


class Engine:
    def __init__(self, config: EngineConfig):
        self.config = config
        self.volumes = VolumeStore(config.data_root / "volumes")
        self.sessions = SessionStore(config.data_root / "sessions")
        self.cache = EmbeddingCache(config.cache_root, config.cache_budget)
        self.jobs = JobManager()
        self.native = NativePredictor(GrowParams(
            tolerance_fraction=config.tolerance_fraction,
            max_region_fraction=config.max_region_fraction,
        ))
        self.registry = PredictorRegistry(self.native)
        self._bridge_client = None
        if config.bridge_command:
            self.rescan_bridge()

    def rescan_bridge(self):
        """(Re)connect the configured bridge and register its predictors."""
        if not self.config.bridge_command:
            return
        if self._bridge_client is not None:
            self._bridge_client.close()
        self.registry = PredictorRegistry(self.native)
        try:
            client, predictors = probe_bridge(self.config.bridge_command)
        except Exception as exc:
            log.warning("bridge %r unavailable: %s", self.config.bridge_command, exc)
            self._bridge_client = None
            return
        self._bridge_client = client
        for predictor in predictors:
            self.registry.register(predictor)

    def close(self):
        if self._bridge_client is not None:
            self._bridge_client.close()

    # -- volumes ---------------------------------------------------------------

    def add_volume(self, raw: bytes, format: str = "auto") -> dict:
        return self.volumes.put(raw, format)

    def volume_meta(self, volume_id: str) -> dict:
        return self.volumes.meta(volume_id)

    def slice_image(self, volume_id: str, axis: Axis, index: int,
                    window: float | None = None,
                    level: float | None = None) -> SliceImage:
        volume = self.volumes.get(volume_id)
        s = extract_slice(volume, axis, index)
        return render_with_defaults(s, volume.intensity_range, window, level)

    # -- sessions ----------------------------------------------------------------

    def create_session(self, volume_id: str, axis: Axis, label_id: int,
                       predictor_id: str) -> Session:
        volume = self.volumes.get(volume_id)
        self.registry.get(predictor_id)  # validate it exists
        meta = self.volumes.meta(volume_id)
        wl = default_window_level(volume.intensity_range)
        if wl is None:
            # constant volume: render degenerates to uniform zeros
            wl = (1.0, volume.intensity_range[0] + 1.0)
        return self.sessions.create(
            volume_id=volume_id, volume_digest=meta["digest"],
            dims=volume.dims, axis=axis, label_id=label_id,
            predictor_id=predictor_id, window=wl[0], level=wl[1],
        )

    def get_session(self, session_id: str) -> Session:
        return self.sessions.get(session_id)

    # -- prompting ----------------------------------------------------------------

    def _render_session_slice(self, session: Session, index: int) -> SliceImage:
        volume = self.volumes.get(session.volume_id)
        s = extract_slice(volume, session.axis, index)
        return render_with_defaults(s, volume.intensity_range,
                                    session.window, session.level)

    def _embedding_key(self, session: Session, index: int) -> EmbeddingKey:
        return EmbeddingKey(
            volume_digest=session.volume_digest, axis=session.axis.value,
            slice_index=index, predictor_id=session.predictor_id,
            window=session.window, level=session.level,
        )

    def _predict(self, session: Session, predictor: ImagePredictor,
                 prompts: PromptSet) -> MaskSlice:
        img = self._render_session_slice(session, prompts.slice_index)
        key = self._embedding_key(session, prompts.slice_index)
        blob = self.cache.ensure(key, partial(predictor.encode, img))
        try:
            return predictor.predict(blob, prompts)
        except StaleEmbedding:
            # bridge restarted since the blob was cached: re-encode once
            self.cache.invalidate(key)
            blob = self.cache.ensure(key, partial(predictor.encode, img))
            return predictor.predict(blob, prompts)

    def add_prompts(self, session_id: str, slice_index: int,
                    points: list[PointPrompt] = (),
                    box: BoxPrompt | None = None) -> MaskSlice:
        """Extend a slice's prompts, predict its mask, accept it."""
        session = self.sessions.get(session_id)
        predictor = self.registry.get(session.predictor_id)
        with session.mutate():
            for point in points:
                session.add_prompt(slice_index, point)
            if box is not None:
                session.add_prompt(slice_index, box)
            prompts = session.conditional[slice_index].prompts
            prompts.require_seedable()
            mask = self._predict(session, predictor, prompts)
            session.set_conditional_mask(slice_index, mask)
        self.sessions.persist(session)
        return mask

    # -- propagation ----------------------------------------------------------------

    def _frames(self, session: Session) -> list[SliceImage]:
        volume = self.volumes.get(session.volume_id)
        return [
            render_with_defaults(
                extract_slice(volume, session.axis, i),
                volume.intensity_range, session.window, session.level,
            )
            for i in range(session.n_slices)
        ]

    def propagate(self, session_id: str, mode: str,
                  from_slice: int | None = None) -> PropagationJob:
        session = self.sessions.get(session_id)
        predictor = self.registry.get(session.predictor_id)
        if not predictor.descriptor.capabilities.supports_sequence:
            raise SequenceUnsupported(
                f"predictor {session.predictor_id!r} cannot propagate"
            )
        with session.lock:
            n_conditional = len(session.conditional)
            is_conditional = from_slice in session.conditional
        if mode == "all":
            if n_conditional == 0:
                raise NoConditionalSlices("place at least one prompt first")
            total = session.n_slices - n_conditional
            work = lambda handle: run_all(
                session, self._frames(session), predictor,
                self.sessions.persist, handle,
            )
            return self.jobs.submit(session_id, mode, None, total, work)
        if mode in ("left", "right"):
            if from_slice is None or not is_conditional:
                raise FromSliceNotConditional(
                    f"from_slice {from_slice!r} has no prompts"
                )
            total = (from_slice if mode == "left"
                     else session.n_slices - from_slice - 1)
            work = lambda handle: run_directional(
                session, self._frames(session), predictor,
                self.sessions.persist, mode, from_slice, handle,
            )
            return self.jobs.submit(session_id, mode, from_slice, total, work)
        raise ValueError(f"unknown propagation mode {mode!r}")

    # -- refinement ----------------------------------------------------------------

    def _current_bits(self, session: Session, slice_index: int) -> np.ndarray:
        mask = session.mask_for(slice_index)
        if mask is not None:
            return mask.bits
        return np.zeros((session.rows, session.cols), dtype=bool)

    def refine_brush(self, session_id: str, op: BrushOp) -> MaskSlice:
        session = self.sessions.get(session_id)
        with session.mutate():
            session._check_slice(op.slice_index)
            bits = apply_brush(self._current_bits(session, op.slice_index), op)
            mask = MaskSlice(session.rows, session.cols, bits)
            session.set_edited_mask(op.slice_index, mask)
        self.sessions.persist(session)
        return mask

    def refine_morph(self, session_id: str, slice_index: int,
                     kind: MorphKind, radius: int) -> MaskSlice:
        session = self.sessions.get(session_id)
        with session.mutate():
            session._check_slice(slice_index)
            bits = morph(self._current_bits(session, slice_index), kind, radius)
            mask = MaskSlice(session.rows, session.cols, bits)
            session.set_edited_mask(slice_index, mask)
        self.sessions.persist(session)
        return mask

    # -- history ----------------------------------------------------------------

    def undo(self, session_id: str) -> int:
        session = self.sessions.get(session_id)
        revision = session.undo()
        self.sessions.persist(session)
        return revision

    def redo(self, session_id: str) -> int:
        session = self.sessions.get(session_id)
        revision = session.redo()
        self.sessions.persist(session)
        return revision

    # -- export ----------------------------------------------------------------

    def export_labelmap(self, session_id: str, format: str = "nrrd") -> bytes:
        session = self.sessions.get(session_id)
        volume = self.volumes.get(session.volume_id)
        seg = SegmentationVolume(session.dims, session.axis)
        with session.lock:
            for index, entry in session.conditional.items():
                if entry.mask is not None:
                    seg.merge_mask(session.label_id, index, entry.mask)
            for index, mask in session.propagated.items():
                seg.merge_mask(session.label_id, index, mask)
        return save_labelmap(seg.to_dense(), volume, format)

    # -- jobs ----------------------------------------------------------------

    def job_status(self, job_id: str) -> PropagationJob:
        return self.jobs.status(job_id)

    def cancel_job(self, job_id: str) -> PropagationJob:
        return self.jobs.cancel(job_id)

    def subscribe_job(self, job_id: str):
        return self.jobs.subscribe(job_id)
