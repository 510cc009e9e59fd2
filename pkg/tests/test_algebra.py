"""compose / follow / overlaps, checked against independent oracles."""

from __future__ import annotations

import random

import pytest

from generators import (
    random_changeset,
    random_doc,
    resolved_chars,
    sequential_apply,
    touch_set,
)
from golden_data import golden_document
from redsys.changeset import (
    AttributePool,
    Changeset,
    ChangesetBuilder,
    Document,
    LengthMismatch,
    apply_changeset,
    compose,
    follow,
    identity,
    insert_op,
    overlaps,
    transform_spans,
    validate,
)


def make_cs(base_len, pool, *steps):
    builder = ChangesetBuilder(base_len, pool)
    for kind, *args in steps:
        getattr(builder, kind)(*args)
    return builder.finish()


class TestCompose:
    def test_identity_left_unit(self):
        rng = random.Random(3)
        for _ in range(50):
            doc = random_doc(rng)
            cs = random_changeset(rng, doc)
            assert compose(identity(len(doc)), cs, doc.pool) == cs

    def test_identity_right_unit_semantics(self):
        rng = random.Random(4)
        for _ in range(50):
            doc = random_doc(rng)
            cs = random_changeset(rng, doc)
            pool_after = doc.pool.extended(cs.new_pool)
            fused = compose(cs, identity(cs.new_len), doc.pool)
            assert apply_changeset(doc, fused) == apply_changeset(doc, cs)

    def test_insert_then_inner_insert(self):
        pool = AttributePool()
        a = make_cs(0, pool, ("insert", "ab"))
        b = make_cs(2, pool, ("keep", 1), ("insert", "X"))
        c = compose(a, b, pool)
        assert c == Changeset(0, 3, (), (insert_op("aXb"),))

    def test_length_mismatch(self):
        pool = AttributePool()
        with pytest.raises(LengthMismatch):
            compose(identity(3), identity(4), pool)

    def test_matches_sequential_apply(self):
        rng = random.Random(5)
        for _ in range(400):
            doc = random_doc(rng)
            a = random_changeset(rng, doc)
            mid = apply_changeset(doc, a)
            b = random_changeset(rng, mid)
            fused = compose(a, b, doc.pool)
            validate(fused, doc.pool)
            assert apply_changeset(doc, fused) == sequential_apply(doc, a, b)

    def test_result_is_canonical(self):
        rng = random.Random(6)
        for _ in range(100):
            doc = random_doc(rng)
            a = random_changeset(rng, doc)
            b = random_changeset(rng, apply_changeset(doc, a))
            fused = compose(a, b, doc.pool)
            for prev, cur in zip(fused.ops, fused.ops[1:]):
                assert not (prev.op == cur.op and prev.attrs == cur.attrs)
            if fused.ops:
                last = fused.ops[-1]
                assert not (last.op == "=" and not last.attrs)


class TestFollow:
    def test_follow_identity_is_identity(self):
        rng = random.Random(7)
        for _ in range(50):
            doc = random_doc(rng)
            a = random_changeset(rng, doc)
            for flag in (False, True):
                assert follow(a, identity(len(doc)), flag, doc.pool) == identity(a.new_len)

    def test_identity_follow_passthrough(self):
        rng = random.Random(8)
        for _ in range(50):
            doc = random_doc(rng)
            b = random_changeset(rng, doc)
            for flag in (False, True):
                assert follow(identity(len(doc)), b, flag, doc.pool) == b

    def test_same_position_inserts(self):
        doc = Document.from_text("ab")
        a = make_cs(2, doc.pool, ("insert", "x"))
        b = make_cs(2, doc.pool, ("insert", "y"))
        one = apply_changeset(apply_changeset(doc, a), follow(a, b, False, doc.pool))
        two = apply_changeset(apply_changeset(doc, b), follow(b, a, True, doc.pool))
        assert one.text == "xyab"
        assert two.text == "xyab"

    def test_convergence_fuzz(self):
        rng = random.Random(9)
        for _ in range(400):
            doc = random_doc(rng)
            a = random_changeset(rng, doc)
            b = random_changeset(rng, doc)
            one = apply_changeset(apply_changeset(doc, a), follow(a, b, False, doc.pool))
            two = apply_changeset(apply_changeset(doc, b), follow(b, a, True, doc.pool))
            assert one.text == two.text
            assert resolved_chars(one) == resolved_chars(two)

    def test_iterated_equals_composed(self):
        # The broker transforms a stale submission one revision at a time;
        # that must land on the same document as transforming across the
        # composition of those revisions.
        rng = random.Random(10)
        for _ in range(300):
            doc = random_doc(rng)
            d1 = random_changeset(rng, doc)
            mid = apply_changeset(doc, d1)
            d2 = random_changeset(rng, mid)
            cs = random_changeset(rng, doc)

            fused = compose(d1, d2, doc.pool)
            via_composed = follow(fused, cs, True, doc.pool)
            step1 = follow(d1, cs, True, doc.pool)
            via_iterated = follow(d2, step1, True, doc.pool.extended(d1.new_pool))

            base = sequential_apply(doc, d1, d2)
            assert resolved_chars(apply_changeset(base, via_composed)) == resolved_chars(
                apply_changeset(base, via_iterated)
            )
            assert apply_changeset(base, via_composed).text == apply_changeset(
                base, via_iterated
            ).text

    def test_base_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            follow(identity(3), identity(4), False, AttributePool())


class TestOverlaps:
    def test_disjoint_ranges(self):
        doc = golden_document()
        a = make_cs(13, doc.pool, ("remove", 3))
        b = make_cs(13, doc.pool, ("keep", 5), ("keep", 5, {"color": "red"}))
        assert not overlaps(a, b)

    def test_shared_index(self):
        doc = golden_document()
        a = make_cs(13, doc.pool, ("remove", 3))
        b = make_cs(13, doc.pool, ("keep", 2), ("keep", 3, {"color": "red"}))
        assert overlaps(a, b)

    def test_insert_touches_its_position(self):
        pool = AttributePool()
        a = make_cs(4, pool, ("keep", 2), ("insert", "zz"))
        b = make_cs(4, pool, ("keep", 2), ("keep", 1, {"k": "v"}))
        assert overlaps(a, b)
        c = make_cs(4, pool, ("keep", 3), ("keep", 1, {"k": "v"}))
        assert not overlaps(a, c)

    def test_matches_touch_set_oracle(self):
        rng = random.Random(12)
        for _ in range(500):
            doc = random_doc(rng)
            a = random_changeset(rng, doc)
            b = random_changeset(rng, doc)
            assert overlaps(a, b) == bool(touch_set(a) & touch_set(b))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            overlaps(identity(3), identity(4))


class TestTransformSpans:
    def test_insert_before_shifts(self):
        pool = AttributePool()
        cs = make_cs(10, pool, ("insert", "xx"))
        assert transform_spans([(4, 7)], cs, pool) == [(6, 9)]

    def test_insert_after_leaves_alone(self):
        pool = AttributePool()
        cs = make_cs(10, pool, ("keep", 9), ("insert", "xx"))
        assert transform_spans([(4, 7)], cs, pool) == [(4, 7)]

    def test_delete_inside_shrinks(self):
        pool = AttributePool()
        cs = make_cs(10, pool, ("keep", 5), ("remove", 1))
        assert transform_spans([(4, 7)], cs, pool) == [(4, 6)]

    def test_insert_inside_splits(self):
        pool = AttributePool()
        cs = make_cs(10, pool, ("keep", 5), ("insert", "zz"))
        assert transform_spans([(4, 7)], cs, pool) == [(4, 5), (7, 9)]

    def test_span_fully_deleted_drops_out(self):
        pool = AttributePool()
        cs = make_cs(10, pool, ("keep", 2), ("remove", 6))
        assert transform_spans([(3, 7)], cs, pool) == []

    def test_characters_track_identity(self):
        # a span must keep covering the same characters it covered before
        rng = random.Random(13)
        for _ in range(200):
            doc = random_doc(rng, max_len=30)
            if len(doc) < 3:
                continue
            lo = rng.randrange(0, len(doc) - 1)
            hi = rng.randrange(lo + 1, len(doc) + 1)
            cs = random_changeset(rng, doc)
            marked_before = set(range(lo, hi))
            survived: list[int] = []  # new index of each surviving old char
            pos_old = pos_new = 0
            for op in list(cs.ops) + [None]:
                if op is None:
                    while pos_old < len(doc):
                        if pos_old in marked_before:
                            survived.append(pos_new)
                        pos_old += 1
                        pos_new += 1
                elif op.op == "+":
                    pos_new += op.n
                elif op.op == "-":
                    pos_old += op.n
                else:
                    for _i in range(op.n):
                        if pos_old in marked_before:
                            survived.append(pos_new)
                        pos_old += 1
                        pos_new += 1
            spans = transform_spans([(lo, hi)], cs, doc.pool)
            covered = sorted(i for s, e in spans for i in range(s, e))
            assert covered == survived
