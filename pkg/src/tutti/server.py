"""Realtime projection service: play the orchestra from a live piano.

A session holds the performer-facing state: current 88-key piano vector, the
ring buffer of the model's own last ``n_past`` orchestral frames, sampling
settings, and a monotonic frame counter.  Each *tick* snapshots that state,
generates one orchestral frame, pushes it into the ring, and reports per-tick
compute latency.

The session core (:class:`LiveSession`) is synchronous and I/O-free; the
WebSocket layer wraps it with an ordered per-connection queue.  All queued
messages are drained before ticking, and at most one tick runs per drained
batch, so a flood of pulses coalesces (latest piano state wins) instead of
building a backlog.  Ticks run on the event loop thread, which also makes
model/sampling swaps atomic between ticks for free.

Protocol (JSON text over ``/session``):

    client: {"type": "note_on", "pitch": 60, "velocity": 80, "pulse": true}
            {"type": "note_off", "pitch": 60}
            {"type": "piano_frame", "pitches": [60, 64], "pulse": true}
            {"type": "pulse"}
            {"type": "set_model", "model_id": "..."}
            {"type": "set_sampling", "gibbs_steps": 20, "threshold": 0.5, "seed": 1}
            {"type": "reset"}
    server: {"type": "orchestra_frame", "frame": k, "parts": {...}, "latency_ms": f}
            {"type": "ack", "request": ...}
            {"type": "error", "detail": ...}

Plus ``GET /models`` and ``GET /health``.
"""

import argparse
import asyncio
import dataclasses
import json
import logging
import os
import time
from pathlib import Path

import numpy as np

from .models.base import SamplingConfig, binarize
from .models.serialize import MAGIC, ModelBundle, SerializationError, load_model
from .pianoroll import PIANO_DIM, PIANO_HIGH, PIANO_LOW
from .projection import check_bundle_wiring, predict_frames

logger = logging.getLogger(__name__)

TICK_BUDGET_MS = 100.0
ENV_PREFIX = "LOP_"


class ModelStore:
    """Read-only registry of model files in a directory, loaded lazily.

    Bundles are cached and shared across sessions; nothing here mutates them.
    """

    def __init__(self, models_dir):
        self.models_dir = Path(models_dir)
        self._cache: dict[str, ModelBundle] = {}

    def model_ids(self) -> list[str]:
        if not self.models_dir.is_dir():
            return []
        ids = []
        for path in sorted(self.models_dir.iterdir()):
            if not path.is_file():
                continue
            try:
                with open(path, "rb") as fh:
                    if fh.read(len(MAGIC)) == MAGIC:
                        ids.append(path.stem)
            except OSError:
                continue
        return ids

    def _path_for(self, model_id: str) -> Path:
        for path in sorted(self.models_dir.iterdir()):
            if path.is_file() and path.stem == model_id:
                return path
        raise KeyError(f"no model named {model_id!r} in {self.models_dir}")

    def get(self, model_id: str) -> ModelBundle:
        if model_id not in self._cache:
            bundle = load_model(self._path_for(model_id))
            check_bundle_wiring(bundle)
            self._cache[model_id] = bundle
        return self._cache[model_id]

    def describe(self) -> list[dict]:
        out = []
        for model_id in self.model_ids():
            try:
                bundle = self.get(model_id)
            except (SerializationError, KeyError, ValueError) as exc:
                logger.warning("skipping model %r: %s", model_id, exc)
                continue
            out.append(
                {
                    "model_id": model_id,
                    "kind": bundle.kind,
                    "quantization": bundle.quantization,
                    "n_past": bundle.n_past,
                    "orchestra_dim": bundle.orchestra_dim,
                    "layout": bundle.layout.to_dict(),
                }
            )
        return out


class LiveSession:
    """One performer's session: piano vector, orchestral past, one model.

    All methods are synchronous; callers decide when :meth:`tick` runs.
    ``apply_message`` performs state changes only and reports whether the
    message asked for a tick, which lets the transport layer coalesce.
    """

    def __init__(self, store: ModelStore, model_id: str | None = None):
        self.store = store
        self.piano = np.zeros(PIANO_DIM, dtype=np.uint8)
        self.frame_count = 0
        self.latencies_ms: list[float] = []
        self.bundle: ModelBundle | None = None
        self.model_id: str | None = None
        self.sampling = SamplingConfig()
        self._rng = self.sampling.rng()
        self._ring = np.zeros((0, 0))
        self._ring_used = False
        if model_id is not None:
            reply = self.set_model(model_id)
            if reply["type"] == "error":
                raise ValueError(reply["detail"])

    # --- state changes -----------------------------------------------------

    def _reseed(self):
        self._rng = self.sampling.rng()

    def _fresh_ring(self, bundle: ModelBundle) -> np.ndarray:
        return np.zeros((bundle.n_past, bundle.orchestra_dim))

    def set_model(self, model_id: str) -> dict:
        """Swap models; the orchestral past carries over when shapes allow it.

        A pristine (still all-silence) ring imposes nothing, so any model is
        accepted and gets a fresh ring.  Once real frames are in the ring the
        new model must agree on the orchestra dimension; its ``n_past`` may
        differ (the ring is end-aligned, padded with silence or truncated).
        """
        try:
            bundle = self.store.get(model_id)
        except (KeyError, SerializationError, ValueError) as exc:
            return {"type": "error", "detail": str(exc)}
        if self._ring_used and self.bundle is not None:
            old_d, new_d = self.bundle.orchestra_dim, bundle.orchestra_dim
            if old_d != new_d:
                return {
                    "type": "error",
                    "detail": (
                        f"model {model_id!r} is incompatible with the session's "
                        f"orchestral past: expected orchestra_dim={old_d}, "
                        f"got {new_d} (reset first to switch layouts)"
                    ),
                }
            ring = self._fresh_ring(bundle)
            keep = min(len(ring), len(self._ring))
            if keep:
                ring[len(ring) - keep :] = self._ring[len(self._ring) - keep :]
            self._ring = ring
        else:
            self._ring = self._fresh_ring(bundle)
            self._ring_used = False
        self.bundle = bundle
        self.model_id = model_id
        self.sampling = bundle.sampling
        self._reseed()
        return {
            "type": "ack",
            "request": "set_model",
            "model_id": model_id,
            "kind": bundle.kind,
            "orchestra_dim": bundle.orchestra_dim,
            "sampling": dataclasses.asdict(self.sampling),
        }

    def set_sampling(self, fields: dict) -> dict:
        allowed = {"gibbs_steps", "seed", "output_mode", "threshold"}
        unknown = set(fields) - allowed
        if unknown:
            return {
                "type": "error",
                "detail": f"unknown sampling fields: {sorted(unknown)}",
            }
        try:
            merged = dataclasses.replace(self.sampling, **fields)
        except (TypeError, ValueError) as exc:
            return {"type": "error", "detail": f"bad sampling settings: {exc}"}
        self.sampling = merged
        self._reseed()
        return {
            "type": "ack",
            "request": "set_sampling",
            "sampling": dataclasses.asdict(self.sampling),
        }

    def reset(self) -> dict:
        """Silence the orchestral past; the frame counter keeps counting up."""
        if self.bundle is not None:
            self._ring = self._fresh_ring(self.bundle)
        self._ring_used = False
        self._reseed()
        return {"type": "ack", "request": "reset"}

    def _set_pitch(self, pitch, on: bool) -> list[dict]:
        if not isinstance(pitch, int) or isinstance(pitch, bool):
            return [{"type": "error", "detail": f"pitch must be an integer, got {pitch!r}"}]
        if not 0 <= pitch <= 127:
            return [{"type": "error", "detail": f"pitch {pitch} outside MIDI range 0..127"}]
        if not PIANO_LOW <= pitch <= PIANO_HIGH:
            return [
                {
                    "type": "ack",
                    "request": "note_on" if on else "note_off",
                    "warning": f"pitch {pitch} outside the 88-key range; ignored",
                }
            ]
        self.piano[pitch - PIANO_LOW] = 1 if on else 0
        return []

    def apply_message(self, msg) -> tuple[list[dict], bool]:
        """Apply one message; returns (replies, wants_tick). Never ticks."""
        if not isinstance(msg, dict) or "type" not in msg:
            return [{"type": "error", "detail": "message must be an object with a 'type'"}], False
        kind = msg["type"]
        wants_tick = bool(msg.get("pulse", False))
        if kind == "note_on":
            return self._set_pitch(msg.get("pitch"), True), wants_tick
        if kind == "note_off":
            return self._set_pitch(msg.get("pitch"), False), wants_tick
        if kind == "piano_frame":
            pitches = msg.get("pitches")
            if not isinstance(pitches, list) or not all(
                isinstance(p, int) and not isinstance(p, bool) for p in pitches
            ):
                return [{"type": "error", "detail": "piano_frame needs a list of integer pitches"}], False
            vec = np.zeros(PIANO_DIM, dtype=np.uint8)
            dropped = [p for p in pitches if not PIANO_LOW <= p <= PIANO_HIGH]
            for p in pitches:
                if PIANO_LOW <= p <= PIANO_HIGH:
                    vec[p - PIANO_LOW] = 1
            self.piano = vec
            replies = []
            if dropped:
                replies.append(
                    {
                        "type": "ack",
                        "request": "piano_frame",
                        "warning": f"pitches outside the 88-key range ignored: {sorted(set(dropped))}",
                    }
                )
            return replies, wants_tick
        if kind == "pulse":
            return [], True
        if kind == "set_model":
            model_id = msg.get("model_id")
            if not isinstance(model_id, str):
                return [{"type": "error", "detail": "set_model needs a string 'model_id'"}], False
            return [self.set_model(model_id)], wants_tick
        if kind == "set_sampling":
            fields = {k: v for k, v in msg.items() if k not in ("type", "pulse")}
            return [self.set_sampling(fields)], wants_tick
        if kind == "reset":
            return [self.reset()], wants_tick
        return [{"type": "error", "detail": f"unknown message type {kind!r}"}], False

    def handle_message(self, msg) -> list[dict]:
        """Apply one message and run the tick it asks for, if any."""
        replies, wants_tick = self.apply_message(msg)
        if wants_tick:
            replies.append(self.tick())
        return replies

    # --- the tick -------------------------------------------------------------

    def tick(self) -> dict:
        """Generate one orchestral frame from the current snapshot."""
        if self.bundle is None:
            return {"type": "error", "detail": "no model loaded; send set_model first"}
        t0 = time.perf_counter()
        history = self._ring.reshape(1, -1)
        out = predict_frames(
            self.bundle.model,
            self.piano[None, :].astype(np.float64),
            history,
            self.sampling,
            rng=self._rng,
        )
        if self.sampling.output_mode == "mean-field":
            frame = binarize(out[0], self.sampling.threshold)
        else:
            frame = out[0].astype(np.uint8)
        if len(self._ring):
            self._ring = np.vstack([self._ring[1:], frame.astype(np.float64)[None, :]])
        self._ring_used = True
        latency_ms = (time.perf_counter() - t0) * 1000.0
        self.latencies_ms.append(latency_ms)
        reply = {
            "type": "orchestra_frame",
            "frame": self.frame_count,
            "parts": self.bundle.layout.vector_to_parts(frame),
            "latency_ms": round(latency_ms, 3),
        }
        if latency_ms > TICK_BUDGET_MS:
            reply["over_budget"] = True
        self.frame_count += 1
        return reply

    def latency_stats(self) -> dict:
        if not self.latencies_ms:
            return {"count": 0}
        arr = np.array(self.latencies_ms)
        return {
            "count": len(arr),
            "median_ms": float(np.median(arr)),
            "p95_ms": float(np.percentile(arr, 95)),
            "max_ms": float(arr.max()),
        }


# --- transport -----------------------------------------------------------------


def build_app(store: ModelStore, metronome_ms: float = 0.0):
    """FastAPI app serving the session WebSocket and the model registry."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI(title="orchestra projection server")
    app.state.store = store
    app.state.metronome_ms = metronome_ms
    started = time.monotonic()

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "models": len(store.model_ids()),
            "uptime_s": round(time.monotonic() - started, 3),
        }

    @app.get("/models")
    def models():
        return {"models": store.describe()}

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        ids = store.model_ids()
        session = LiveSession(store)
        hello = {"type": "ack", "request": "connect", "models": ids}
        if ids:
            first = session.set_model(ids[0])
            if first["type"] == "ack":
                hello["model_id"] = session.model_id
            else:
                hello["warning"] = first["detail"]
        await ws.send_text(json.dumps(hello))

        queue: asyncio.Queue = asyncio.Queue()
        CLOSE = object()

        async def reader():
            try:
                while True:
                    await queue.put(await ws.receive_text())
            except WebSocketDisconnect:
                await queue.put(CLOSE)
            except RuntimeError:
                await queue.put(CLOSE)

        reader_task = asyncio.create_task(reader())

        async def metronome():
            while True:
                await asyncio.sleep(metronome_ms / 1000.0)
                await ws.send_text(json.dumps(session.tick()))

        metro_task = asyncio.create_task(metronome()) if metronome_ms > 0 else None
        try:
            while True:
                batch = [await queue.get()]
                while not queue.empty():
                    batch.append(queue.get_nowait())
                if CLOSE in batch:
                    break
                # Apply every state change in arrival order, then run at most
                # one tick: pulses that piled up while computing coalesce.
                replies: list[dict] = []
                wants_tick = False
                for raw in batch:
                    try:
                        msg = json.loads(raw)
                    except json.JSONDecodeError as exc:
                        replies.append({"type": "error", "detail": f"bad JSON: {exc}"})
                        continue
                    msg_replies, tick_requested = session.apply_message(msg)
                    replies.extend(msg_replies)
                    wants_tick = wants_tick or tick_requested
                if wants_tick:
                    replies.append(session.tick())
                for reply in replies:
                    await ws.send_text(json.dumps(reply))
        finally:
            reader_task.cancel()
            if metro_task is not None:
                metro_task.cancel()

    return app


def _config_value(args_value, env_name: str, default, cast):
    """CLI flag > LOP_ environment variable > default."""
    if args_value is not None:
        return args_value
    raw = os.environ.get(ENV_PREFIX + env_name)
    if raw is not None:
        return cast(raw)
    return default


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tutti serve", description="Serve live piano-to-orchestra projection."
    )
    parser.add_argument("--models-dir", help="directory of trained model files")
    parser.add_argument("--port", type=int, help="TCP port (default 8861)")
    parser.add_argument(
        "--metronome-ms",
        type=float,
        help="server tick period in ms; 0 = client-pulsed only (default)",
    )
    parser.add_argument("--host", default="127.0.0.1", help="bind address")
    args = parser.parse_args(argv)

    models_dir = _config_value(args.models_dir, "MODELS_DIR", "models", str)
    port = _config_value(args.port, "PORT", 8861, int)
    metronome_ms = _config_value(args.metronome_ms, "METRONOME_MS", 0.0, float)

    import uvicorn

    store = ModelStore(models_dir)
    n_models = len(store.model_ids())
    if n_models == 0:
        logger.warning("no model files found under %s", models_dir)
    app = build_app(store, metronome_ms=metronome_ms)
    logger.info("serving %d models from %s on port %d", n_models, models_dir, port)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
