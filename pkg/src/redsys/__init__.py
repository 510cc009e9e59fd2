"""redsys: real-time document synchronization and service broker."""

from .changeset import (
    AttributePair,
    AttributePool,
    AttributeRangeRule,
    BadAttributeId,
    ChangeOp,
    Changeset,
    ChangesetBuilder,
    Document,
    DuplicateKeyInOpAttrs,
    DuplicatePoolEntry,
    LengthMismatch,
    NonCanonical,
    RuleOutOfBounds,
    ValidationError,
    apply_attrs,
    apply_changeset,
    compose,
    delete_op,
    follow,
    identity,
    insert_op,
    keep_op,
    overlaps,
    ranges_to_ops,
    snapshot_of,
    transform_spans,
    validate,
)

__all__ = [
    "AttributePair",
    "AttributePool",
    "AttributeRangeRule",
    "BadAttributeId",
    "ChangeOp",
    "Changeset",
    "ChangesetBuilder",
    "Document",
    "DuplicateKeyInOpAttrs",
    "DuplicatePoolEntry",
    "LengthMismatch",
    "NonCanonical",
    "RuleOutOfBounds",
    "ValidationError",
    "apply_attrs",
    "apply_changeset",
    "compose",
    "delete_op",
    "follow",
    "identity",
    "insert_op",
    "keep_op",
    "overlaps",
    "ranges_to_ops",
    "snapshot_of",
    "transform_spans",
    "validate",
]
