// Websocket wrapper: frame dispatch plus reconnect-with-snapshot.

import { ServerFrame, parseFrame, snapshotRequest } from "./protocol.js";

export class SessionSocket {
  private ws: WebSocket | null = null;
  private sessionId: string | null = null;
  onframe: (frame: ServerFrame) => void = () => undefined;
  onstatus: (status: string) => void = () => undefined;

  constructor(private baseUrl: string) {}

  connect(seed?: number): void {
    const params = new URLSearchParams();
    if (this.sessionId) params.set("session", this.sessionId);
    else if (seed !== undefined) params.set("seed", String(seed));
    const url = `${this.baseUrl}/session?${params.toString()}`;
    const ws = new WebSocket(url);
    this.ws = ws;
    ws.onopen = () => {
      this.onstatus("connected");
      if (this.sessionId) this.send(snapshotRequest()); // re-render on rejoin
    };
    ws.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (frame.type === "hello") this.sessionId = frame.session;
      this.onframe(frame);
    };
    ws.onclose = () => {
      this.onstatus("disconnected");
      setTimeout(() => this.connect(), 1000); // the episode keeps running
    };
  }

  send(frame: object): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(frame));
    }
  }
}
