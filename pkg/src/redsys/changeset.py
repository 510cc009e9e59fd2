"""Attributed-text document model and the changeset algebra.

A document is plain text plus an append-only pool of (key, value) attribute
pairs and, per character, a set of pool ids.  A changeset describes an edit
of such a document as a left-to-right sequence of insert / delete / keep
operations and is the unit in which every change travels between peers.

The algebra implemented here:

* ``apply_changeset``   -- run a changeset against a document
* ``compose``           -- fuse two sequential changesets into one
* ``follow``            -- transform a changeset across a concurrent one
                           so both application orders converge
* ``overlaps``          -- do two concurrent changesets touch common text?
* ``ChangesetBuilder``  -- construct changesets left-to-right
* ``ranges_to_ops``     -- sweep a list of attribute-range rules into a
                           single attribute-only changeset

All values are immutable after construction and every operation is a pure
function, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

INSERT = "+"
DELETE = "-"
KEEP = "="

AttributePair = tuple[str, str]


class ValidationError(Exception):
    """A changeset or document constraint was violated."""


class LengthMismatch(ValidationError):
    pass


class NonCanonical(ValidationError):
    pass


class BadAttributeId(ValidationError):
    pass


class DuplicateKeyInOpAttrs(ValidationError):
    pass


class DuplicatePoolEntry(ValidationError):
    pass


class RuleOutOfBounds(ValidationError):
    pass


class AttributePool:
    """Append-only table of (key, value) pairs; a pair's index is its id.

    Pairs are unique within a pool: interning an existing pair yields the
    existing id.  Existing entries are never mutated or removed.
    """

    __slots__ = ("_entries", "_index")

    def __init__(self, entries: Iterable[AttributePair] = ()):
        self._entries: tuple[AttributePair, ...] = tuple((str(k), str(v)) for k, v in entries)
        self._index: dict[AttributePair, int] = {}
        for i, pair in enumerate(self._entries):
            if pair in self._index:
                raise DuplicatePoolEntry(f"pair {pair!r} appears twice in pool")
            self._index[pair] = i

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AttributePool) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"AttributePool({list(self._entries)!r})"

    def entries(self) -> tuple[AttributePair, ...]:
        return self._entries

    def pair(self, attr_id: int) -> AttributePair:
        try:
            return self._entries[attr_id]
        except (IndexError, TypeError):
            raise BadAttributeId(f"id {attr_id!r} not in pool of size {len(self._entries)}") from None

    def id_of(self, pair: AttributePair) -> int | None:
        return self._index.get(pair)

    def extended(self, pairs: Iterable[AttributePair]) -> "AttributePool":
        """New pool with ``pairs`` appended; rejects duplicates."""
        new_entries = list(self._entries)
        seen = dict(self._index)
        for pair in pairs:
            pair = (str(pair[0]), str(pair[1]))
            if pair in seen:
                raise DuplicatePoolEntry(f"pair {pair!r} already pooled as id {seen[pair]}")
            seen[pair] = len(new_entries)
            new_entries.append(pair)
        return AttributePool(new_entries)

    def prefix(self, length: int) -> "AttributePool":
        """The pool as it was when it held only the first ``length`` entries."""
        if not 0 <= length <= len(self._entries):
            raise BadAttributeId(f"prefix length {length} out of range")
        return AttributePool(self._entries[:length])


class _StackedPool:
    """Read-only view of a pool plus extra entry runs (changeset newPool)."""

    __slots__ = ("_base", "_layers", "_size")

    def __init__(self, base: "PoolLike", *layers: Sequence[AttributePair]):
        self._base = base
        self._layers = layers
        self._size = len(base) + sum(len(run) for run in layers)

    def __len__(self) -> int:
        return self._size

    def pair(self, attr_id: int) -> AttributePair:
        if not isinstance(attr_id, int) or attr_id < 0:
            raise BadAttributeId(f"id {attr_id!r} is not a valid pool id")
        offset = len(self._base)
        if attr_id < offset:
            return self._base.pair(attr_id)
        for run in self._layers:
            if attr_id < offset + len(run):
                return run[attr_id - offset]
            offset += len(run)
        raise BadAttributeId(f"id {attr_id} not in pool of size {self._size}")

    def id_of(self, pair: AttributePair) -> int | None:
        found = self._base.id_of(pair)
        if found is not None:
            return found
        offset = len(self._base)
        for run in self._layers:
            for j, candidate in enumerate(run):
                if candidate == pair:
                    return offset + j
            offset += len(run)
        return None


# Anything with pair()/id_of()/len() works where a pool is expected.
PoolLike = AttributePool | _StackedPool

EMPTY_ATTRS: frozenset[int] = frozenset()


@dataclass(frozen=True)
class ChangeOp:
    """One insert (+), delete (-) or keep (=) step of a changeset."""

    op: str
    n: int
    attrs: frozenset[int] = EMPTY_ATTRS
    text: str = ""


def insert_op(text: str, attrs: Iterable[int] = ()) -> ChangeOp:
    return ChangeOp(INSERT, len(text), frozenset(attrs), text)


def delete_op(n: int) -> ChangeOp:
    return ChangeOp(DELETE, n)


def keep_op(n: int, attrs: Iterable[int] = ()) -> ChangeOp:
    return ChangeOp(KEEP, n, frozenset(attrs))


@dataclass(frozen=True)
class Changeset:
    """An edit: base length, result length, new pool entries, op list.

    ``new_pool`` ids continue the target pool's numbering: with a target
    pool of size p, id p + j refers to ``new_pool[j]``.  Ops may consume
    fewer than ``base_len`` characters; the unconsumed suffix is kept
    unchanged.
    """

    base_len: int
    new_len: int
    new_pool: tuple[AttributePair, ...] = ()
    ops: tuple[ChangeOp, ...] = ()

    def is_identity(self) -> bool:
        return not self.ops and self.base_len == self.new_len

    def to_wire(self) -> dict:
        """Canonical structured record used on the wire and in logs."""
        ops = []
        for op in self.ops:
            rec: dict = {"op": op.op, "len": op.n, "attrs": sorted(op.attrs)}
            if op.op == INSERT:
                rec["text"] = op.text
            ops.append(rec)
        return {
            "baseLen": self.base_len,
            "newLen": self.new_len,
            "newPool": [[k, v] for k, v in self.new_pool],
            "ops": ops,
        }

    @classmethod
    def from_wire(cls, record: Mapping) -> "Changeset":
        try:
            base_len = record["baseLen"]
            new_len = record["newLen"]
            pool = tuple((str(k), str(v)) for k, v in record["newPool"])
            ops = []
            for rec in record["ops"]:
                sym = rec["op"]
                if sym not in (INSERT, DELETE, KEEP):
                    raise ValueError(f"unknown op symbol {sym!r}")
                attrs = frozenset(int(a) for a in rec["attrs"])
                text = str(rec["text"]) if sym == INSERT else ""
                ops.append(ChangeOp(sym, int(rec["len"]), attrs, text))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed changeset record: {exc}") from exc
        return cls(int(base_len), int(new_len), pool, tuple(ops))


def identity(length: int) -> Changeset:
    """The changeset that leaves any document of ``length`` unchanged."""
    if length < 0:
        raise LengthMismatch("negative document length")
    return Changeset(length, length)


class Document:
    """Immutable attributed text: characters, pool, per-character id sets."""

    __slots__ = ("text", "pool", "attrs")

    def __init__(self, text: str, pool: AttributePool, attrs: Sequence[frozenset[int]]):
        if len(attrs) != len(text):
            raise LengthMismatch(f"{len(attrs)} attr sets for {len(text)} characters")
        self.text = text
        self.pool = pool
        self.attrs = tuple(attrs)

    @classmethod
    def from_text(cls, text: str) -> "Document":
        return cls(text, AttributePool(), [EMPTY_ATTRS] * len(text))

    def __len__(self) -> int:
        return len(self.text)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Document)
            and self.text == other.text
            and self.pool == other.pool
            and self.attrs == other.attrs
        )

    def __repr__(self) -> str:
        return f"Document({self.text!r}, pool={len(self.pool)} entries)"

    def char_pairs(self, i: int) -> frozenset[AttributePair]:
        """The resolved (key, value) pairs on character ``i``."""
        return frozenset(self.pool.pair(a) for a in self.attrs[i])

    def same_content(self, other: "Document") -> bool:
        """Text plus resolved per-character attributes match (ids may differ)."""
        return self.text == other.text and all(
            self.char_pairs(i) == other.char_pairs(i) for i in range(len(self.text))
        )


def validate(cs: Changeset, pool: PoolLike) -> None:
    """Check every changeset invariant against ``pool``; raise on violation."""
    if cs.base_len < 0 or cs.new_len < 0:
        raise LengthMismatch("negative length")
    base_size = len(pool)
    seen_new: set[AttributePair] = set()
    for pair in cs.new_pool:
        if pool.id_of(pair) is not None:
            raise DuplicatePoolEntry(f"newPool pair {pair!r} already in target pool")
        if pair in seen_new:
            raise DuplicatePoolEntry(f"newPool pair {pair!r} repeated")
        seen_new.add(pair)
    full = _StackedPool(pool, cs.new_pool)

    consumed = 0
    inserted = 0
    deleted = 0
    prev: ChangeOp | None = None
    for op in cs.ops:
        if op.op not in (INSERT, DELETE, KEEP):
            raise NonCanonical(f"unknown op symbol {op.op!r}")
        if op.n <= 0:
            raise NonCanonical("zero-length op")
        if op.op == INSERT:
            if len(op.text) != op.n:
                raise LengthMismatch(f"insert len {op.n} but text has {len(op.text)} chars")
            inserted += op.n
        else:
            if op.text:
                raise NonCanonical(f"{op.op!r} op carries text")
            if op.op == DELETE:
                if op.attrs:
                    raise NonCanonical("delete op carries attributes")
                deleted += op.n
            consumed += op.n
        keys: set[str] = set()
        for attr_id in op.attrs:
            if not isinstance(attr_id, int) or not 0 <= attr_id < base_size + len(cs.new_pool):
                raise BadAttributeId(f"id {attr_id!r} unresolvable (pool size {len(full)})")
            key = full.pair(attr_id)[0]
            if key in keys:
                raise DuplicateKeyInOpAttrs(f"two values for key {key!r} in one op")
            keys.add(key)
        if prev is not None and prev.op == op.op and prev.attrs == op.attrs:
            raise NonCanonical(f"adjacent mergeable {op.op!r} ops")
        prev = op
    if consumed > cs.base_len:
        raise LengthMismatch(f"ops consume {consumed} of a {cs.base_len}-char base")
    if cs.new_len != cs.base_len - deleted + inserted:
        raise LengthMismatch(
            f"newLen {cs.new_len} != baseLen {cs.base_len} - {deleted} deleted + {inserted} inserted"
        )


def apply_attrs(
    existing: frozenset[int], applied: frozenset[int], pool: PoolLike
) -> frozenset[int]:
    """Apply an attribute set on top of an existing one.

    Per key the applied id wins; pairs whose value is the empty string mean
    "remove this key" and never appear in the result.
    """
    by_key: dict[str, int] = {}
    for attr_id in sorted(existing):
        by_key[pool.pair(attr_id)[0]] = attr_id
    for attr_id in sorted(applied):
        by_key[pool.pair(attr_id)[0]] = attr_id
    return frozenset(a for a in by_key.values() if pool.pair(a)[1] != "")


def apply_changeset(doc: Document, cs: Changeset) -> Document:
    """Run ``cs`` against ``doc`` and return the new document."""
    validate(cs, doc.pool)
    if cs.base_len != len(doc.text):
        raise LengthMismatch(f"changeset base {cs.base_len} vs document length {len(doc.text)}")
    pool = doc.pool.extended(cs.new_pool)
    text_parts: list[str] = []
    attrs: list[frozenset[int]] = []
    pos = 0
    for op in cs.ops:
        if op.op == INSERT:
            text_parts.append(op.text)
            inserted = apply_attrs(EMPTY_ATTRS, op.attrs, pool)
            attrs.extend([inserted] * op.n)
        elif op.op == DELETE:
            pos += op.n
        else:
            text_parts.append(doc.text[pos : pos + op.n])
            if op.attrs:
                for i in range(pos, pos + op.n):
                    attrs.append(apply_attrs(doc.attrs[i], op.attrs, pool))
            else:
                attrs.extend(doc.attrs[pos : pos + op.n])
            pos += op.n
    text_parts.append(doc.text[pos:])
    attrs.extend(doc.attrs[pos:])
    result = Document("".join(text_parts), pool, attrs)
    if len(result) != cs.new_len:
        raise LengthMismatch(f"result length {len(result)} != declared newLen {cs.new_len}")
    return result


def _canonical(ops: Iterable[ChangeOp]) -> tuple[ChangeOp, ...]:
    """Coalesce mergeable neighbours, drop empties, trim the trailing plain keep."""
    out: list[ChangeOp] = []
    for op in ops:
        if op.n <= 0:
            continue
        if out and out[-1].op == op.op and out[-1].attrs == op.attrs:
            last = out[-1]
            out[-1] = ChangeOp(op.op, last.n + op.n, op.attrs, last.text + op.text)
        else:
            out.append(op)
    if out and out[-1].op == KEEP and not out[-1].attrs:
        out.pop()
    return tuple(out)


def _new_len_of(base_len: int, ops: Iterable[ChangeOp]) -> int:
    n = base_len
    for op in ops:
        if op.op == INSERT:
            n += op.n
        elif op.op == DELETE:
            n -= op.n
    return n


class _Cursor:
    """Walks a changeset's ops, materializing the implicit trailing keep."""

    def __init__(self, cs: Changeset, consumable: int):
        explicit = sum(op.n for op in cs.ops if op.op != INSERT)
        tail = consumable - explicit
        ops = list(cs.ops)
        if tail > 0:
            ops.append(keep_op(tail))
        self._ops = ops
        self._i = 0
        self._offset = 0  # chars of the current op already taken

    def peek(self) -> ChangeOp | None:
        if self._i >= len(self._ops):
            return None
        return self._ops[self._i]

    @property
    def remaining(self) -> int:
        return self._ops[self._i].n - self._offset

    def take(self, n: int) -> ChangeOp:
        """Consume ``n`` characters of the current op, returning that chunk."""
        op = self._ops[self._i]
        start = self._offset
        self._offset += n
        if self._offset == op.n:
            self._i += 1
            self._offset = 0
        text = op.text[start : start + n] if op.op == INSERT else ""
        return ChangeOp(op.op, n, op.attrs, text)

    def take_all(self) -> ChangeOp:
        return self.take(self.remaining)


def _merge_applied(
    first: frozenset[int], second: frozenset[int], pool: PoolLike, drop_empty: bool
) -> frozenset[int]:
    """Attr set equivalent to applying ``first`` then ``second``."""
    by_key: dict[str, int] = {}
    for attr_id in sorted(first):
        by_key[pool.pair(attr_id)[0]] = attr_id
    for attr_id in sorted(second):
        by_key[pool.pair(attr_id)[0]] = attr_id
    ids = by_key.values()
    if drop_empty:
        return frozenset(a for a in ids if pool.pair(a)[1] != "")
    return frozenset(ids)


def compose(a: Changeset, b: Changeset, pool: PoolLike) -> Changeset:
    """The changeset equivalent to applying ``a`` then ``b``.

    ``b`` must be based on ``a``'s output: equal lengths and ids resolving
    in ``pool`` extended by ``a.new_pool``.
    """
    if a.new_len != b.base_len:
        raise LengthMismatch(f"compose: a.newLen {a.new_len} != b.baseLen {b.base_len}")
    validate(a, pool)
    validate(b, _StackedPool(pool, a.new_pool))
    full = _StackedPool(pool, a.new_pool, b.new_pool)

    ca = _Cursor(a, a.base_len)
    cb = _Cursor(b, b.base_len)
    out: list[ChangeOp] = []
    while True:
        oa = ca.peek()
        ob = cb.peek()
        if oa is not None and oa.op == DELETE:
            out.append(ca.take_all())
            continue
        if ob is not None and ob.op == INSERT:
            out.append(cb.take_all())
            continue
        if oa is None and ob is None:
            break
        if ob is None:
            # b consumed all it declared; the rest of a's output is kept as is
            out.append(ca.take_all())
            continue
        if oa is None:
            raise LengthMismatch("compose: b consumes more than a produces")
        n = min(ca.remaining, cb.remaining)
        chunk_a = ca.take(n)
        chunk_b = cb.take(n)
        if chunk_b.op == DELETE:
            if chunk_a.op == KEEP:
                out.append(delete_op(n))
            # insert+delete annihilate
        elif chunk_a.op == INSERT:
            attrs = (
                _merge_applied(chunk_a.attrs, chunk_b.attrs, full, drop_empty=True)
                if chunk_b.attrs
                else chunk_a.attrs
            )
            out.append(ChangeOp(INSERT, n, attrs, chunk_a.text))
        else:
            if not chunk_b.attrs:
                attrs = chunk_a.attrs
            elif not chunk_a.attrs:
                attrs = chunk_b.attrs
            else:
                attrs = _merge_applied(chunk_a.attrs, chunk_b.attrs, full, drop_empty=False)
            out.append(ChangeOp(KEEP, n, attrs))
    ops = _canonical(out)
    return Changeset(a.base_len, b.new_len, a.new_pool + b.new_pool, ops)


def _follow_attrs(
    first: frozenset[int],
    second: frozenset[int],
    second_applied_first: bool,
    pool: PoolLike,
) -> frozenset[int]:
    """Attrs the transformed keep must carry when both sides kept a range.

    The temporally earlier side's attributes count as applied first, so the
    later side wins key conflicts.
    """
    if second_applied_first:
        first_keys = {pool.pair(a)[0] for a in first}
        return frozenset(a for a in second if pool.pair(a)[0] not in first_keys)
    first_pairs = {pool.pair(a) for a in first}
    return frozenset(a for a in second if pool.pair(a) not in first_pairs)


def follow(a: Changeset, b: Changeset, reverse_insert_order: bool, pool: PoolLike) -> Changeset:
    """Transform ``b`` so it applies after ``a`` (both based on the same text).

    ``reverse_insert_order`` selects which side counts as temporally earlier
    at exact ties: False means ``a`` (its inserts come first and its
    attributes are applied first), True means ``b``.  Transforming both ways
    with opposite flags converges:
    ``compose(a, follow(a, b, False)) == compose(b, follow(b, a, True))``.
    """
    if a.base_len != b.base_len:
        raise LengthMismatch(f"follow: base {a.base_len} != {b.base_len}")
    validate(a, pool)
    validate(b, pool)

    # b's new-pool ids must resolve after a: dedupe against a's new pool and
    # shift the survivors past it.
    base_size = len(pool)
    a_index = {pair: i for i, pair in enumerate(a.new_pool)}
    b_new: list[AttributePair] = [p for p in b.new_pool if p not in a_index]
    b_pos = {pair: j for j, pair in enumerate(b_new)}
    id_map: dict[int, int] = {}
    for j, pair in enumerate(b.new_pool):
        old = base_size + j
        if pair in a_index:
            id_map[old] = base_size + a_index[pair]
        else:
            id_map[old] = base_size + len(a.new_pool) + b_pos[pair]

    def remap(attrs: frozenset[int]) -> frozenset[int]:
        return frozenset(id_map.get(x, x) for x in attrs)

    full = _StackedPool(pool, a.new_pool, tuple(b_new))
    ca = _Cursor(a, a.base_len)
    cb = _Cursor(b, b.base_len)
    out: list[ChangeOp] = []
    while True:
        oa = ca.peek()
        ob = cb.peek()
        a_inserting = oa is not None and oa.op == INSERT
        b_inserting = ob is not None and ob.op == INSERT
        if a_inserting and b_inserting:
            if reverse_insert_order:
                chunk = cb.take_all()
                out.append(ChangeOp(INSERT, chunk.n, remap(chunk.attrs), chunk.text))
            else:
                out.append(keep_op(ca.take_all().n))
            continue
        if a_inserting:
            out.append(keep_op(ca.take_all().n))
            continue
        if b_inserting:
            chunk = cb.take_all()
            out.append(ChangeOp(INSERT, chunk.n, remap(chunk.attrs), chunk.text))
            continue
        if oa is None and ob is None:
            break
        if oa is None or ob is None:
            raise LengthMismatch("follow: cursors out of step")
        n = min(ca.remaining, cb.remaining)
        chunk_a = ca.take(n)
        chunk_b = cb.take(n)
        if chunk_a.op == DELETE:
            continue  # gone before b' runs, whatever b wanted
        if chunk_b.op == DELETE:
            out.append(delete_op(n))
        else:
            attrs = _follow_attrs(
                chunk_a.attrs, remap(chunk_b.attrs), reverse_insert_order, full
            )
            out.append(ChangeOp(KEEP, n, attrs))
    ops = _canonical(out)
    return Changeset(a.new_len, _new_len_of(a.new_len, ops), tuple(b_new), ops)


def touched_spans(cs: Changeset) -> list[tuple[int, int]]:
    """Half-open base-index spans touched by non-plain-keep ops.

    An insert at position p touches [p, p+1); deletes and attribute-carrying
    keeps touch the characters they cover.
    """
    spans: list[tuple[int, int]] = []

    def add(lo: int, hi: int) -> None:
        if spans and spans[-1][1] >= lo:
            spans[-1] = (spans[-1][0], max(spans[-1][1], hi))
        else:
            spans.append((lo, hi))

    pos = 0
    for op in cs.ops:
        if op.op == INSERT:
            add(pos, pos + 1)
        elif op.op == DELETE:
            add(pos, pos + op.n)
            pos += op.n
        else:
            if op.attrs:
                add(pos, pos + op.n)
            pos += op.n
    return spans


def overlaps(a: Changeset, b: Changeset) -> bool:
    """True iff some base character index is touched by both changesets."""
    if a.base_len != b.base_len:
        raise LengthMismatch(f"overlaps: base {a.base_len} != {b.base_len}")
    sa = touched_spans(a)
    sb = touched_spans(b)
    i = j = 0
    while i < len(sa) and j < len(sb):
        lo = max(sa[i][0], sb[j][0])
        hi = min(sa[i][1], sb[j][1])
        if lo < hi:
            return True
        if sa[i][1] <= sb[j][1]:
            i += 1
        else:
            j += 1
    return False


AttrsArg = Mapping[str, str] | Iterable[AttributePair] | None


class ChangesetBuilder:
    """Builds a changeset by describing the document left-to-right.

    Attribute arguments are (key, value) pairs; pairs absent from the base
    pool are interned into the changeset's new-pool entries.
    """

    def __init__(self, base_len: int, pool: PoolLike):
        if base_len < 0:
            raise LengthMismatch("negative base length")
        self._base_len = base_len
        self._pool = pool
        self._new: list[AttributePair] = []
        self._new_index: dict[AttributePair, int] = {}
        # raw [sym, n, attrs, text] entries, coalesced as they arrive
        self._raw: list[list] = []

    def _intern(self, attrs: AttrsArg) -> frozenset[int]:
        if not attrs:
            return EMPTY_ATTRS
        pairs = attrs.items() if isinstance(attrs, (dict, Mapping)) else attrs
        ids = []
        keys: set[str] = set()
        for key, value in pairs:
            key, value = str(key), str(value)
            if key in keys:
                raise DuplicateKeyInOpAttrs(f"two values for key {key!r}")
            keys.add(key)
            found = self._pool.id_of((key, value))
            if found is None:
                found = self._new_index.get((key, value))
                if found is None:
                    found = len(self._pool) + len(self._new)
                    self._new_index[(key, value)] = found
                    self._new.append((key, value))
            ids.append(found)
        return frozenset(ids)

    def _push(self, sym: str, n: int, attrs: frozenset[int], text: str) -> None:
        if self._raw:
            last = self._raw[-1]
            if last[0] == sym and last[2] == attrs:
                last[1] += n
                last[3] += text
                return
        self._raw.append([sym, n, attrs, text])

    def keep(self, n: int, attrs: AttrsArg = None) -> "ChangesetBuilder":
        if n <= 0:
            raise ValueError("keep length must be positive")
        self._push(KEEP, n, self._intern(attrs), "")
        return self

    def insert(self, text: str, attrs: AttrsArg = None) -> "ChangesetBuilder":
        if text:
            self._push(INSERT, len(text), self._intern(attrs), text)
        return self

    def remove(self, n: int) -> "ChangesetBuilder":
        if n <= 0:
            raise ValueError("remove length must be positive")
        self._push(DELETE, n, EMPTY_ATTRS, "")
        return self

    def finish(self) -> Changeset:
        raw = self._raw
        if raw and raw[-1][0] == KEEP and not raw[-1][2]:
            raw = raw[:-1]
        ops = tuple(ChangeOp(sym, n, attrs, text) for sym, n, attrs, text in raw)
        consumed = sum(op.n for op in ops if op.op != INSERT)
        if consumed > self._base_len:
            raise LengthMismatch(f"ops consume {consumed} of a {self._base_len}-char base")
        cs = Changeset(self._base_len, _new_len_of(self._base_len, ops), tuple(self._new), ops)
        validate(cs, self._pool)
        return cs


@dataclass(frozen=True)
class AttributeRangeRule:
    """Apply (key, value) to characters ``begin`` through ``end`` inclusive."""

    key: str
    value: str
    begin: int
    end: int


def ranges_to_ops(
    rules: Sequence[AttributeRangeRule], doc_len: int, pool: PoolLike
) -> Changeset:
    """Sweep attribute-range rules into one attribute-only changeset.

    Each rule contributes an add event at ``begin`` and a remove event at
    ``end + 1``; events are processed in position order (removes before adds
    at equal positions), maintaining the set of currently active pairs and
    emitting a keep whenever the position advances.  Later rules win key
    conflicts while their ranges overlap.
    """
    events: list[tuple[int, int, int, AttributePair]] = []
    for seq, rule in enumerate(rules):
        if not 0 <= rule.begin <= rule.end < doc_len:
            raise RuleOutOfBounds(
                f"rule {rule.key}={rule.value} range [{rule.begin},{rule.end}] "
                f"outside document of length {doc_len}"
            )
        pair = (rule.key, rule.value)
        events.append((rule.begin, 1, seq, pair))
        events.append((rule.end + 1, 0, seq, pair))
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    builder = ChangesetBuilder(doc_len, pool)
    current: list[tuple[int, AttributePair]] = []  # later rules win key conflicts
    last = 0
    for pos, kind, seq, pair in events:
        if pos > last:
            effective: dict[str, str] = {}
            for _seq, (key, value) in sorted(current):
                effective[key] = value
            builder.keep(pos - last, effective)
            last = pos
        if kind == 1:
            current.append((seq, pair))
        else:
            current.remove((seq, pair))
    return builder.finish()


def snapshot_of(doc: Document) -> Changeset:
    """The changeset which, applied to an empty document, reproduces ``doc``."""
    ops: list[ChangeOp] = []
    i = 0
    n = len(doc.text)
    while i < n:
        j = i
        while j < n and doc.attrs[j] == doc.attrs[i]:
            j += 1
        ops.append(insert_op(doc.text[i:j], doc.attrs[i]))
        i = j
    return Changeset(0, n, doc.pool.entries(), tuple(ops))


def rebase_pool(cs: Changeset, from_pool: PoolLike, to_pool: PoolLike) -> Changeset:
    """Re-express a changeset against a different (pair-compatible) pool.

    Every id is resolved to its pair under ``from_pool`` + the changeset's
    own entries, then looked up or interned against ``to_pool``.  Needed
    when two transform paths produced the same pairs under different ids.
    """
    src = _StackedPool(from_pool, cs.new_pool)
    new: list[AttributePair] = []
    new_index: dict[AttributePair, int] = {}

    def convert(attrs: frozenset[int]) -> frozenset[int]:
        out = []
        for attr_id in attrs:
            pair = src.pair(attr_id)
            found = to_pool.id_of(pair)
            if found is None:
                found = new_index.get(pair)
                if found is None:
                    found = len(to_pool) + len(new)
                    new_index[pair] = found
                    new.append(pair)
            out.append(found)
        return frozenset(out)

    ops = tuple(
        ChangeOp(op.op, op.n, convert(op.attrs), op.text) if op.attrs else op
        for op in cs.ops
    )
    return Changeset(cs.base_len, cs.new_len, tuple(new), ops)


_MARKER_KEY = "\x00span"


def transform_spans(
    spans: Sequence[tuple[int, int]], cs: Changeset, pool: PoolLike
) -> list[tuple[int, int]]:
    """Rebase half-open character spans across a changeset.

    Builds a synthetic keep-with-marker changeset over the spans, transforms
    it with ``follow``, and reads the marker positions back.  Characters
    inserted inside a span are not part of the result; deleted characters
    drop out.
    """
    rules = [
        AttributeRangeRule(_MARKER_KEY, str(i), lo, hi - 1)
        for i, (lo, hi) in enumerate(spans)
        if lo < hi
    ]
    if not rules:
        return []
    marker = ranges_to_ops(rules, cs.base_len, pool)
    moved = follow(cs, marker, False, pool)
    full = _StackedPool(pool, cs.new_pool, moved.new_pool)
    out: list[tuple[int, int]] = []
    pos = 0
    for op in moved.ops:
        if op.op == KEEP:
            if any(full.pair(a)[0] == _MARKER_KEY for a in op.attrs):
                if out and out[-1][1] == pos:
                    out[-1] = (out[-1][0], pos + op.n)
                else:
                    out.append((pos, pos + op.n))
            pos += op.n
        elif op.op == INSERT:
            pos += op.n
    return out
