"""Shared random generators and independent oracles for the algebra tests.

The oracles here deliberately avoid the code paths they check: documents are
painted character by character, touch sets are materialized as plain index
sets, and composed/followed changesets are judged only by sequentially
applying their inputs.
"""

from __future__ import annotations

import random

from redsys.changeset import (
    AttributePool,
    AttributeRangeRule,
    Changeset,
    ChangesetBuilder,
    Document,
    apply_changeset,
)

KEYS = ["bold", "author", "hl", "spot", "color", "size", "lang", "mark"]
VALUES = ["", "1", "2", "true", "x"]
ALPHABET = "abcdefg XYZ\né☃"


def random_doc(rng: random.Random, max_len: int = 50, max_pool: int = 8) -> Document:
    pool_pairs = []
    for key in rng.sample(KEYS, rng.randint(0, min(max_pool, len(KEYS)))):
        pool_pairs.append((key, rng.choice(VALUES)))
    pool = AttributePool(dict.fromkeys(pool_pairs))
    n = rng.randint(0, max_len)
    text = "".join(rng.choice(ALPHABET) for _ in range(n))
    attrs = []
    for _ in range(n):
        chosen: dict[str, int] = {}
        for attr_id in range(len(pool)):
            key, value = pool.pair(attr_id)
            if value != "" and rng.random() < 0.3:
                chosen[key] = attr_id
        attrs.append(frozenset(chosen.values()))
    return Document(text, pool, attrs)


def random_attr_pairs(rng: random.Random) -> dict[str, str]:
    out = {}
    for key in rng.sample(KEYS, rng.randint(0, 2)):
        out[key] = rng.choice(VALUES)
    return out


def random_changeset(rng: random.Random, doc: Document) -> Changeset:
    """A valid random changeset for ``doc``, built through the builder."""
    builder = ChangesetBuilder(len(doc), doc.pool)
    pos = 0
    while pos < len(doc):
        step = rng.randint(1, max(1, (len(doc) - pos) // 2 + 1))
        step = min(step, len(doc) - pos)
        choice = rng.random()
        if choice < 0.35:
            builder.keep(step, random_attr_pairs(rng) if rng.random() < 0.5 else None)
            pos += step
        elif choice < 0.55:
            builder.remove(step)
            pos += step
        elif choice < 0.85:
            text = "".join(rng.choice(ALPHABET) for _ in range(rng.randint(1, 5)))
            builder.insert(text, random_attr_pairs(rng) if rng.random() < 0.4 else None)
        else:
            pos += step  # leave a gap for the implicit keep
            if pos < len(doc):
                builder.keep(1)
                pos += 1
    if rng.random() < 0.3:
        text = "".join(rng.choice(ALPHABET) for _ in range(rng.randint(1, 4)))
        builder.insert(text, random_attr_pairs(rng) if rng.random() < 0.4 else None)
    return builder.finish()


def paint_chars(doc: Document, rules: list[AttributeRangeRule]) -> list[dict[str, str]]:
    """Brute-force oracle: resolved attrs per character after applying rules."""
    out = []
    for i in range(len(doc)):
        current = {k: v for k, v in sorted(doc.char_pairs(i))}
        for rule in rules:
            if rule.begin <= i <= rule.end:
                current[rule.key] = rule.value
        out.append({k: v for k, v in current.items() if v != ""})
    return out


def touch_set(cs: Changeset) -> set[int]:
    """Brute-force oracle for overlaps: every touched base index as a set."""
    touched: set[int] = set()
    pos = 0
    for op in cs.ops:
        if op.op == "+":
            touched.add(pos)
        elif op.op == "-":
            touched.update(range(pos, pos + op.n))
            pos += op.n
        else:
            if op.attrs:
                touched.update(range(pos, pos + op.n))
            pos += op.n
    return touched


def resolved_chars(doc: Document) -> list[tuple[str, frozenset]]:
    """Content signature for exact text+attribute comparison across pools."""
    return [(doc.text[i], doc.char_pairs(i)) for i in range(len(doc))]


def sequential_apply(doc: Document, *changesets: Changeset) -> Document:
    for cs in changesets:
        doc = apply_changeset(doc, cs)
    return doc


def exhaustive_sweep_mismatches(max_len: int = 8, max_rules: int = 3) -> int:
    """Compare the range sweep against per-character painting, exhaustively.

    Covers every document length up to ``max_len`` and every combination of
    up to ``max_rules`` ranges, with a fixed pair assignment that exercises
    same-key and cross-key overlap.  Returns the number of mismatches.
    """
    import itertools

    from redsys.changeset import ranges_to_ops, validate

    pairs = [("k", "1"), ("k", "2"), ("j", "1")]
    mismatches = 0
    for doc_len in range(1, max_len + 1):
        doc = Document.from_text("a" * doc_len)
        ranges = [(b, e) for b in range(doc_len) for e in range(b, doc_len)]
        for count in range(0, max_rules + 1):
            for combo in itertools.product(ranges, repeat=count):
                rules = [
                    AttributeRangeRule(pairs[i][0], pairs[i][1], b, e)
                    for i, (b, e) in enumerate(combo)
                ]
                cs = ranges_to_ops(rules, doc_len, doc.pool)
                validate(cs, doc.pool)
                out = apply_changeset(doc, cs)
                swept = [dict(sorted(out.char_pairs(i))) for i in range(doc_len)]
                if swept != paint_chars(doc, rules):
                    mismatches += 1
    return mismatches
