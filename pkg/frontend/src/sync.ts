/**
 * The editor's three-buffer mirror of the shared document:
 *
 * - committed: the broker's document at `rev`
 * - sent:      at most one changeset on the wire awaiting Ack
 * - pending:   local keystrokes not yet sent
 *
 * The displayed document is committed + sent + pending, an invariant that
 * holds after every keystroke and every processed message. Incoming updates
 * rebase sent/pending with the same earlier/later flags the broker applies,
 * so the mirror converges on exactly the broker's document.
 */

import {
  AttributePool,
  Changeset,
  Doc,
  applyChangeset,
  compose,
  diffTexts,
  follow,
  fromWire,
  isIdentity,
  rebasePool,
  transformCaret,
} from "./changeset.js";
import { InitMsg } from "./protocol.js";

export class SyncSession {
  committed: Doc | null = null;
  rev = -1;
  sent: Changeset | null = null;
  pending: Changeset | null = null;
  private visibleAtReject: string[] | null = null;

  get ready(): boolean {
    return this.committed !== null;
  }

  initFrom(msg: InitMsg): void {
    this.committed = applyChangeset(Doc.fromText(""), fromWire(msg.snapshot));
    this.rev = msg.rev;
    this.sent = null;
    this.pending = null;
  }

  private requireDoc(): Doc {
    if (!this.committed) throw new Error("session not initialized");
    return this.committed;
  }

  displayDoc(): Doc {
    let doc = this.requireDoc();
    if (this.sent) doc = applyChangeset(doc, this.sent);
    if (this.pending && !isIdentity(this.pending)) doc = applyChangeset(doc, this.pending);
    return doc;
  }

  /** Pool the pending buffer is based on (committed pool + sent layer). */
  private poolAfterSent(): AttributePool {
    const doc = this.requireDoc();
    if (!this.sent) return doc.pool;
    const pool = doc.pool.clone();
    for (const pair of this.sent.newPool) pool.push(pair);
    return pool;
  }

  /** Folds an edit based on the display doc into the pending buffer. */
  localEdit(cs: Changeset): void {
    this.requireDoc();
    if (!this.pending || isIdentity(this.pending)) {
      this.pending = cs;
    } else {
      this.pending = compose(this.pending, cs, this.poolAfterSent());
    }
  }

  /** Promotes pending to sent when the wire is free. */
  takeSubmit(): { baseRev: number; changeset: Changeset } | null {
    if (this.sent || !this.pending || isIdentity(this.pending)) return null;
    this.sent = this.pending;
    this.pending = null;
    return { baseRev: this.rev, changeset: this.sent };
  }

  /**
   * Advances committed by a broadcast revision, rebasing sent and pending.
   * Returns the update as it applies to the displayed document, which is
   * what the caret must be transformed through.
   */
  handleUpdate(rev: number, cs: Changeset): Changeset {
    const doc = this.requireDoc();
    if (rev !== this.rev + 1) {
      throw new ResyncNeeded(`expected rev ${this.rev + 1}, received ${rev}`);
    }
    const pool = doc.pool;
    let updateForDisplay = cs;
    if (this.sent) {
      const oldSent = this.sent;
      const pastSent = follow(oldSent, cs, false, pool);
      const newSent = follow(cs, oldSent, true, pool);
      updateForDisplay = pastSent;
      if (this.pending && !isIdentity(this.pending)) {
        const chainPool = this.poolAfterSent();
        const oldPending = this.pending;
        const moved = follow(pastSent, oldPending, true, chainPool);
        this.pending = rebasePool(
          moved,
          pool,
          [oldSent.newPool, pastSent.newPool],
          pool,
          [cs.newPool, newSent.newPool],
        );
        updateForDisplay = follow(oldPending, pastSent, false, chainPool);
      }
      this.sent = newSent;
    } else if (this.pending && !isIdentity(this.pending)) {
      const oldPending = this.pending;
      this.pending = follow(cs, oldPending, true, pool);
      updateForDisplay = follow(oldPending, cs, false, pool);
    }
    this.committed = applyChangeset(doc, cs);
    this.rev = rev;
    return updateForDisplay;
  }

  handleAck(newRev: number): void {
    const doc = this.requireDoc();
    if (!this.sent) throw new ResyncNeeded("ack with nothing in flight");
    if (newRev !== this.rev + 1) {
      throw new ResyncNeeded(`ack for rev ${newRev}, expected ${this.rev + 1}`);
    }
    this.committed = applyChangeset(doc, this.sent);
    this.rev = newRev;
    this.sent = null;
  }

  /** Captures what the user currently sees, then drops the in-flight edit. */
  handleReject(): void {
    this.visibleAtReject = this.ready ? this.displayDoc().chars : null;
    this.sent = null;
  }

  /**
   * Reject/resync recovery: keep what the user sees, re-seed from a fresh
   * snapshot, and re-diff the visible text into the pending buffer.
   */
  reseed(msg: InitMsg): void {
    const visible =
      this.visibleAtReject ?? (this.ready ? this.displayDoc().chars : null);
    this.visibleAtReject = null;
    this.initFrom(msg);
    if (visible) {
      const committed = this.requireDoc();
      const diff = diffTexts(committed.chars, visible, committed.pool);
      if (!isIdentity(diff)) this.pending = diff;
    }
  }
}

export class ResyncNeeded extends Error {}

export { transformCaret };
