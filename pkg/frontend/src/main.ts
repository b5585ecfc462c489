/**
 * Browser bootstrap: wire the session, DOM, and audio together against a
 * running projection server.
 *
 * The server location defaults to the page's host on port 8861 and can be
 * overridden with `?server=http://host:port`.
 */

import { fetchModels, type OrchestraFrame } from "./protocol.js";
import { ConsoleSession, type TransportFactory } from "./session.js";
import { PolySynth, webAudioSink } from "./synth.js";
import {
  attachWebMidi,
  buildControls,
  buildKeyboard,
  buildStatus,
  renderLanes,
  syncControls,
  syncStatus,
} from "./ui.js";

function serverBase(): string {
  const override = new URLSearchParams(window.location.search).get("server");
  if (override) return override.replace(/\/$/, "");
  const host = window.location.hostname || "127.0.0.1";
  return `http://${host}:8861`;
}

function wsUrl(base: string): string {
  return base.replace(/^http/, "ws") + "/session";
}

const browserTransport: TransportFactory = (url, handlers) => {
  const socket = new WebSocket(url);
  socket.onopen = () => handlers.onOpen();
  socket.onmessage = (event) => handlers.onMessage(String(event.data));
  socket.onclose = () => handlers.onClose();
  return {
    send: (data) => socket.send(data),
    close: () => socket.close(),
  };
};

export function boot(root: HTMLElement): ConsoleSession {
  const base = serverBase();

  // Audio has to wait for a user gesture; created on the first key press.
  let synth: PolySynth | null = null;
  const ensureSynth = () => {
    if (synth === null && typeof AudioContext !== "undefined") {
      synth = new PolySynth(webAudioSink(new AudioContext()));
    }
    return synth;
  };

  const status = buildStatus();
  const lanesEl = document.createElement("div");
  lanesEl.className = "lanes";

  const session = new ConsoleSession({
    onState: (state) => {
      syncStatus(status, state);
      syncControls(controls.refs, state);
      if (state.phase === "disconnected") synth?.silence();
    },
    onFrame: (frame: OrchestraFrame) => {
      renderLanes(lanesEl, session.roll);
      ensureSynth()?.applyFrame(frame.parts);
    },
  });

  const controls = buildControls(session);
  const keyboard = buildKeyboard(session);
  keyboard.addEventListener("pointerdown", () => ensureSynth(), { once: true });

  root.append(status.banner, status.strip, controls.panel, lanesEl, keyboard, status.toasts);

  // Model list is also available over plain HTTP before the socket opens.
  void fetchModels(base)
    .then((models) => {
      syncControls(controls.refs, { ...session.state, models: models.map((m) => m.model_id) });
    })
    .catch(() => {
      /* the hello ack will fill the list once the socket connects */
    });

  session.connect(wsUrl(base), browserTransport);
  void attachWebMidi(session);

  const reconnect = document.createElement("button");
  reconnect.textContent = "reconnect";
  reconnect.className = "reconnect";
  reconnect.addEventListener("click", () => {
    if (session.state.phase === "disconnected") {
      session.connect(wsUrl(base), browserTransport);
    }
  });
  status.strip.appendChild(reconnect);

  return session;
}

if (typeof document !== "undefined" && document.getElementById("console-root")) {
  boot(document.getElementById("console-root") as HTMLElement);
}
