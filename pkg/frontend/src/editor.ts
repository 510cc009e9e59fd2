/**
 * The collaborative editor widget: a textarea the user types into, a styled
 * overlay painting service attributes behind it, and a read-only reading
 * pane applying folding and transclusion. Connects to the broker's
 * WebSocket endpoint and keeps the three-buffer sync state.
 */

import {
  ChangesetBuilder,
  codePoints,
  fromWire,
  isIdentity,
  toWire,
  diffTexts,
  transformCaret,
} from "./changeset.js";
import { decode, encode, EventResponseMsg, Message } from "./protocol.js";
import { rawSegments, readingSegments, Segment } from "./render.js";
import { SyncSession, ResyncNeeded } from "./sync.js";

export interface EditorOptions {
  url: string; // ws://host:port
  docId: string;
  user: string;
  input: HTMLTextAreaElement;
  overlay: HTMLElement;
  reading: HTMLElement;
  status: HTMLElement;
  menu: HTMLElement;
}

export class CollaborativeEditor {
  private session = new SyncSession();
  private socket: WebSocket;
  private corr = 0;
  private eventWaiters = new Map<string, (items: unknown[]) => void>();
  private opts: EditorOptions;

  constructor(opts: EditorOptions) {
    this.opts = opts;
    this.socket = new WebSocket(opts.url);
    this.socket.addEventListener("open", () => this.hello());
    this.socket.addEventListener("message", (ev) => this.onFrame(String(ev.data)));
    this.socket.addEventListener("close", () => this.setStatus("disconnected"));
    opts.input.addEventListener("input", () => this.onLocalInput());
    opts.input.addEventListener("keydown", (ev) => {
      if (ev.ctrlKey && ev.code === "Space") {
        ev.preventDefault();
        void this.autocomplete();
      }
    });
    opts.input.addEventListener("scroll", () => this.syncScroll());
    opts.overlay.addEventListener("contextmenu", (ev) => this.onContextMenu(ev));
    opts.input.addEventListener("contextmenu", (ev) => this.onContextMenu(ev));
    document.addEventListener("click", () => this.hideMenu());
  }

  private setStatus(text: string): void {
    this.opts.status.textContent = text;
  }

  private send(msg: Message): void {
    this.socket.send(encode(msg));
  }

  private hello(): void {
    this.send({
      kind: "Hello",
      docId: this.opts.docId,
      clientId: this.opts.user,
      role: "editor",
      subscriptions: [],
    });
    this.setStatus("connecting…");
  }

  private onFrame(frame: string): void {
    let msg: Message;
    try {
      msg = decode(frame);
    } catch {
      return;
    }
    try {
      this.dispatch(msg);
    } catch (err) {
      if (err instanceof ResyncNeeded) this.hello();
      else throw err;
    }
  }

  private dispatch(msg: Message): void {
    switch (msg.kind) {
      case "Init": {
        if (this.session.ready) this.session.reseed(msg);
        else this.session.initFrom(msg);
        this.flush();
        this.refresh(null);
        this.setStatus(`rev ${this.session.rev}`);
        break;
      }
      case "Update": {
        const updateForDisplay = this.session.handleUpdate(msg.rev, fromWire(msg.changeset));
        this.refresh(updateForDisplay);
        this.setStatus(`rev ${this.session.rev}`);
        break;
      }
      case "Ack": {
        this.session.handleAck(msg.newRev);
        this.flush();
        this.setStatus(`rev ${this.session.rev}`);
        break;
      }
      case "Reject": {
        this.session.handleReject();
        this.hello(); // fresh Init; reseed() re-diffs what the user sees
        break;
      }
      case "EventResponse": {
        const waiter = this.eventWaiters.get(msg.correlationId);
        if (waiter) {
          this.eventWaiters.delete(msg.correlationId);
          waiter((msg as EventResponseMsg).items);
        }
        break;
      }
      case "Error": {
        this.setStatus(`error: ${msg.code}`);
        break;
      }
      default:
        break;
    }
  }

  // -- local edits -----------------------------------------------------------

  private onLocalInput(): void {
    if (!this.session.ready) return;
    const display = this.session.displayDoc();
    const typed = codePoints(this.opts.input.value);
    const diff = diffTexts(display.chars, typed, display.pool);
    if (!isIdentity(diff)) {
      this.session.localEdit(diff);
      this.flush();
      this.refresh(null, false);
    }
  }

  private flush(): void {
    const staged = this.session.takeSubmit();
    if (staged) {
      this.send({
        kind: "Submit",
        docId: this.opts.docId,
        baseRev: staged.baseRev,
        changeset: toWire(staged.changeset),
      });
    }
  }

  /** Re-renders both panes; transforms the caret through a remote update. */
  private refresh(updateForDisplay: ReturnType<SyncSession["handleUpdate"]> | null, resetInput = true): void {
    const doc = this.session.displayDoc();
    const input = this.opts.input;
    if (resetInput) {
      const caretCp = codePoints(input.value.slice(0, input.selectionStart ?? 0)).length;
      const moved = updateForDisplay ? transformCaret(caretCp, updateForDisplay) : caretCp;
      input.value = doc.text;
      const utf16 = codePoints(doc.text).slice(0, moved).join("").length;
      input.setSelectionRange(utf16, utf16);
    }
    this.paint(this.opts.overlay, rawSegments(doc), true);
    this.paint(this.opts.reading, readingSegments(doc), false);
    this.syncScroll();
  }

  private paint(pane: HTMLElement, segments: Segment[], padTrailingLine: boolean): void {
    pane.replaceChildren();
    for (const segment of segments) {
      const span = document.createElement("span");
      span.textContent = segment.text;
      if (segment.classes.length) span.className = segment.classes.join(" ");
      if (segment.uiUri) span.dataset.ui = segment.uiUri;
      span.dataset.start = String(segment.sourceStart);
      pane.appendChild(span);
    }
    if (padTrailingLine) pane.appendChild(document.createTextNode("\n"));
  }

  private syncScroll(): void {
    this.opts.overlay.scrollTop = this.opts.input.scrollTop;
    this.opts.overlay.scrollLeft = this.opts.input.scrollLeft;
  }

  // -- interaction URIs --------------------------------------------------------

  private sendSyncEvent(uri: string, params: Record<string, string>): Promise<unknown[]> {
    this.corr += 1;
    const correlationId = `w${this.corr}`;
    return new Promise((resolve) => {
      const timer = setTimeout(() => {
        this.eventWaiters.delete(correlationId);
        resolve([]);
      }, 2500);
      this.eventWaiters.set(correlationId, (items) => {
        clearTimeout(timer);
        resolve(items);
      });
      this.send({
        kind: "Event",
        docId: this.opts.docId,
        uri,
        params,
        mode: "sync",
        correlationId,
        timeoutMs: 2000,
      });
    });
  }

  private async autocomplete(): Promise<void> {
    const input = this.opts.input;
    const caretCp = codePoints(input.value.slice(0, input.selectionStart ?? 0)).length;
    const items = await this.sendSyncEvent("autocomplete.stex", { pos: String(caretCp) });
    const suggestions = items.filter((x): x is string => typeof x === "string");
    if (!suggestions.length) return;
    this.showMenu(
      suggestions.map((text) => ({
        label: text,
        run: () => this.insertSuggestion(caretCp, text),
      })),
    );
  }

  /** Selecting a suggestion completes the current word: one single submit. */
  private insertSuggestion(caretCp: number, suggestion: string): void {
    const doc = this.session.displayDoc();
    let start = caretCp;
    while (start > 0 && /[\w\\]/.test(doc.chars[start - 1])) start -= 1;
    const builder = new ChangesetBuilder(doc.length, doc.pool);
    if (start > 0) builder.keep(start);
    if (caretCp > start) builder.remove(caretCp - start);
    builder.insert(suggestion);
    this.session.localEdit(builder.finish());
    this.flush();
    this.refresh(null);
    this.hideMenu();
  }

  private onContextMenu(ev: MouseEvent): void {
    if (!this.session.ready) return;
    const input = this.opts.input;
    const caretCp = codePoints(input.value.slice(0, input.selectionStart ?? 0)).length;
    const doc = this.session.displayDoc();
    const probe = Math.min(caretCp, doc.length - 1);
    if (probe < 0) return;
    const pairs = new Map(doc.charPairs(probe));
    const uri = pairs.get("ui");
    if (!uri || !uri.startsWith("contextmenu.")) return;
    ev.preventDefault();
    void this.openContextMenu(uri);
  }

  private async openContextMenu(uri: string): Promise<void> {
    const items = await this.sendSyncEvent(uri, {});
    const actions = items.filter(
      (x): x is { label: string; action: WrapAction } =>
        typeof x === "object" && x !== null && "label" in x && "action" in x,
    );
    if (!actions.length) return;
    this.showMenu(
      actions.map((item) => ({
        label: item.label,
        run: () => this.applyWrap(item.action),
      })),
    );
  }

  private applyWrap(action: WrapAction): void {
    if (action.kind !== "wrap") return;
    const doc = this.session.displayDoc();
    if (action.end > doc.length) return;
    const builder = new ChangesetBuilder(doc.length, doc.pool);
    if (action.begin > 0) builder.keep(action.begin);
    builder.insert(action.prefix);
    if (action.end > action.begin) builder.keep(action.end - action.begin);
    builder.insert(action.suffix);
    this.session.localEdit(builder.finish());
    this.flush();
    this.refresh(null);
    this.hideMenu();
  }

  private showMenu(entries: { label: string; run: () => void }[]): void {
    const menu = this.opts.menu;
    menu.replaceChildren();
    for (const entry of entries) {
      const row = document.createElement("div");
      row.className = "menu-item";
      row.textContent = entry.label;
      row.addEventListener("click", (ev) => {
        ev.stopPropagation();
        entry.run();
      });
      menu.appendChild(row);
    }
    menu.style.display = "block";
  }

  private hideMenu(): void {
    this.opts.menu.style.display = "none";
  }
}

interface WrapAction {
  kind: string;
  begin: number;
  end: number;
  prefix: string;
  suffix: string;
}
