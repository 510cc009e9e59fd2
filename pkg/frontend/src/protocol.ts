/** Wire messages: one JSON record per WebSocket text frame. */

import { WireChangeset } from "./changeset.js";

export interface HelloMsg {
  kind: "Hello";
  docId: string;
  clientId: string;
  role: "editor" | "service";
  subscriptions: string[];
  requireExisting?: boolean;
}

export interface InitMsg {
  kind: "Init";
  docId: string;
  rev: number;
  snapshot: WireChangeset;
  pool: [string, string][];
}

export interface SubmitMsg {
  kind: "Submit";
  docId: string;
  baseRev: number;
  changeset: WireChangeset;
}

export interface AckMsg {
  kind: "Ack";
  docId: string;
  newRev: number;
}

export interface RejectMsg {
  kind: "Reject";
  docId: string;
  reason: "MergeConflict" | "Validation";
  headRev: number;
}

export interface UpdateMsg {
  kind: "Update";
  docId: string;
  rev: number;
  changeset: WireChangeset;
  authorId: string;
}

export interface EventMsg {
  kind: "Event";
  docId: string;
  uri: string;
  params: Record<string, string>;
  mode: "sync" | "async";
  correlationId?: string;
  timeoutMs?: number;
}

export interface EventResponseMsg {
  kind: "EventResponse";
  docId: string;
  correlationId: string;
  items: unknown[];
}

export interface ErrorMsg {
  kind: "Error";
  docId: string;
  code: string;
  detail: string;
}

export type Message =
  | HelloMsg
  | InitMsg
  | SubmitMsg
  | AckMsg
  | RejectMsg
  | UpdateMsg
  | EventMsg
  | EventResponseMsg
  | ErrorMsg;

const KINDS = new Set([
  "Hello",
  "Init",
  "Submit",
  "Ack",
  "Reject",
  "Update",
  "Event",
  "EventResponse",
  "Error",
]);

export function encode(msg: Message): string {
  return JSON.stringify(msg);
}

export function decode(frame: string): Message {
  const record = JSON.parse(frame);
  if (typeof record !== "object" || record === null || Array.isArray(record)) {
    throw new Error("message must be a JSON object");
  }
  if (!KINDS.has(record.kind)) throw new Error(`unknown message kind ${record.kind}`);
  if (typeof record.docId !== "string") throw new Error("missing docId");
  return record as Message;
}
