"""Headless batch runs: volume + prompt file in, labelmap + report out.

Replicates the interactive workflow without the service: load the volume,
apply the prompt file, predict the conditional masks, propagate, export.
Exit codes: 0 success, 2 bad input, 3 predictor failure, 4 io failure.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotation.mask import dice
from .annotation.prompts import BoxPrompt, PointPrompt, Polarity
from .config import EngineConfig
from .engine import Engine
from .errors import (
    BridgeUnavailable,
    ComputeFailed,
    EngineError,
    NoConditionalSlices,
    NoPromptedSlices,
    ProtocolError,
    SequenceUnsupported,
    UnsupportedPrompt,
)
from .volume.io import format_for_path, load_volume
from .volume.model import Axis, extract_slice, num_slices

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_PREDICTOR = 3
EXIT_IO = 4

_PREDICTOR_ERRORS = (
    BridgeUnavailable, ProtocolError, ComputeFailed, UnsupportedPrompt,
    SequenceUnsupported, NoConditionalSlices, NoPromptedSlices,
)


@dataclass
class BatchSpec:
    volume_path: Path
    prompt_path: Path
    output_path: Path
    predictor_id: str = "native"
    mode: str = "all"
    from_slice: int | None = None
    report_path: Path | None = None
    reference_path: Path | None = None
    tolerance_fraction: float = 0.1
    max_region_fraction: float = 1.0
    cache_root: Path | None = None
    bridge_command: str | None = None


@dataclass
class BatchResult:
    exit_code: int
    report: dict = field(default_factory=dict)
    error: str | None = None


class _BadInput(Exception):
    pass


def _load_prompt_file(path: Path) -> dict:
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise _BadInput(f"cannot read prompt file: {exc}") from exc
    except ValueError as exc:
        raise _BadInput(f"prompt file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "slices" not in payload:
        raise _BadInput("prompt file must be an object with a 'slices' list")
    return payload


def _parse_slice_entry(entry: dict) -> tuple[int, list[PointPrompt], BoxPrompt | None]:
    try:
        index = int(entry["index"])
        points = [
            PointPrompt(row=int(p["row"]), col=int(p["col"]),
                        polarity=Polarity(p.get("polarity", "positive")))
            for p in entry.get("points", [])
        ]
        box = None
        if entry.get("box"):
            b = entry["box"]
            box = BoxPrompt(r0=int(b["r0"]), c0=int(b["c0"]),
                            r1=int(b["r1"]), c1=int(b["c1"]))
    except (KeyError, TypeError, ValueError, EngineError) as exc:
        raise _BadInput(f"bad prompt entry {entry!r}: {exc}") from exc
    return index, points, box


def run_batch(spec: BatchSpec) -> BatchResult:
    try:
        raw = spec.volume_path.read_bytes()
    except OSError as exc:
        return BatchResult(EXIT_BAD_INPUT, error=f"cannot read volume: {exc}")
    try:
        load_volume(raw)  # surface format errors before any engine state exists
    except EngineError as exc:
        return BatchResult(EXIT_BAD_INPUT, error=f"{exc.code}: {exc.message}")

    try:
        prompt_payload = _load_prompt_file(spec.prompt_path)
        axis = Axis(prompt_payload.get("axis", "K"))
        label = int(prompt_payload.get("label", 1))
        slice_entries = [_parse_slice_entry(e) for e in prompt_payload["slices"]]
        if not slice_entries:
            raise _BadInput("prompt file lists no slices")
        if spec.mode in ("left", "right"):
            listed = {index for index, _, _ in slice_entries}
            if spec.from_slice is None:
                raise _BadInput("directional mode requires from_slice")
            if spec.from_slice not in listed:
                raise _BadInput(
                    f"from_slice {spec.from_slice} is not in the prompt file"
                )
        elif spec.mode != "all":
            raise _BadInput(f"unknown mode {spec.mode!r}")
    except (_BadInput, ValueError) as exc:
        return BatchResult(EXIT_BAD_INPUT, error=str(exc))

    reference = None
    if spec.reference_path is not None:
        try:
            reference = load_volume(spec.reference_path.read_bytes())
        except (OSError, EngineError) as exc:
            return BatchResult(EXIT_BAD_INPUT, error=f"bad reference labelmap: {exc}")

    with tempfile.TemporaryDirectory(prefix="sliceseg-batch-") as workdir:
        config = EngineConfig(
            data_root=Path(workdir),
            cache_root=spec.cache_root,
            bridge_command=spec.bridge_command,
            tolerance_fraction=spec.tolerance_fraction,
            max_region_fraction=spec.max_region_fraction,
        )
        engine = Engine(config)
        try:
            meta = engine.add_volume(raw)
            if reference is not None and list(reference.dims) != list(meta["dims"]):
                return BatchResult(
                    EXIT_BAD_INPUT,
                    error=f"reference dims {reference.dims} != volume dims {meta['dims']}",
                )
            try:
                engine.registry.get(spec.predictor_id)
            except EngineError as exc:
                return BatchResult(EXIT_BAD_INPUT, error=exc.message)
            session = engine.create_session(
                meta["volume_id"], axis, label, spec.predictor_id
            )
            try:
                for index, points, box in slice_entries:
                    engine.add_prompts(session.session_id, index, points, box)
            except EngineError as exc:
                if isinstance(exc, _PREDICTOR_ERRORS):
                    return BatchResult(EXIT_PREDICTOR, error=f"{exc.code}: {exc.message}")
                return BatchResult(EXIT_BAD_INPUT, error=f"{exc.code}: {exc.message}")

            try:
                job = engine.propagate(session.session_id, spec.mode, spec.from_slice)
                job = engine.jobs.wait(job.job_id)
            except EngineError as exc:
                return BatchResult(EXIT_PREDICTOR, error=f"{exc.code}: {exc.message}")
            if job.state != "done":
                return BatchResult(
                    EXIT_PREDICTOR, error=job.error or f"job ended {job.state}"
                )

            payload = engine.export_labelmap(
                session.session_id, format_for_path(str(spec.output_path))
            )
            report = _build_report(spec, engine, session, meta, reference)
            try:
                _atomic_write(spec.output_path, payload)
                if spec.report_path is not None:
                    _atomic_write(
                        spec.report_path,
                        json.dumps(report, indent=1).encode("utf-8"),
                    )
            except OSError as exc:
                return BatchResult(EXIT_IO, error=f"cannot write output: {exc}")
            return BatchResult(EXIT_OK, report=report)
        finally:
            engine.close()


def _atomic_write(path: Path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)


def _build_report(spec: BatchSpec, engine: Engine, session, meta: dict,
                  reference) -> dict:
    result_bits = {}
    with session.lock:
        for index, entry in session.conditional.items():
            if entry.mask is not None:
                result_bits[index] = entry.mask.bits
        for index, mask in session.propagated.items():
            result_bits[index] = mask.bits

    slices_report = []
    reference_slices = {}
    if reference is not None:
        for index in range(num_slices(reference.dims, session.axis)):
            reference_slices[index] = (
                extract_slice(reference, session.axis, index).values > 0
            )
    for index in sorted(result_bits):
        item = {"index": index, "area": int(result_bits[index].sum())}
        if index in reference_slices:
            item["dice"] = dice(result_bits[index], reference_slices[index])
        slices_report.append(item)

    report = {
        "volume": str(spec.volume_path),
        "volume_digest": meta["digest"],
        "predictor": spec.predictor_id,
        "axis": session.axis.value,
        "label": session.label_id,
        "mode": spec.mode,
        "from_slice": spec.from_slice,
        "params": engine.native.params.to_dict(),
        "window": session.window,
        "level": session.level,
        "output": str(spec.output_path),
        "slices": slices_report,
    }
    if reference is not None:
        rows, cols = session.rows, session.cols
        total = np.zeros((session.n_slices, rows, cols), dtype=bool)
        ref_total = np.zeros_like(total)
        for index, bits in result_bits.items():
            total[index] = bits
        for index, bits in reference_slices.items():
            ref_total[index] = bits
        report["volume_dice"] = dice(total, ref_total)
    return report
