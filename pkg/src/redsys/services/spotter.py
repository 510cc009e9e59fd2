"""Term spotter: dictionary lookup standing in for a slow NLP pipeline.

Processing runs in a worker thread: scan the document for dictionary
terms, register a token watching the found spans, sleep the configured
latency, then submit the attribute diff based on the revision where the
scan started.  Edits inside a watched span during the sleep cancel the
round (unless cancellation is disabled, in which case the broker's merge
veto is what stops an overlapping stale result).
"""

from __future__ import annotations

import re
import threading
import time
from dataclasses import dataclass

from ..changeset import Changeset, Document
from ..protocol import Event
from ..service import OwnedAttrLayer, ServiceRunner
from . import stex

SPOT_KEY = "spot"
UI_KEY = "ui"
MENU_PREFIX = "contextmenu.spotter_plugin"


class DictLoadError(Exception):
    pass


class TermDictionary:
    """surface -> [(content dictionary, symbol name), ...], lowercased."""

    def __init__(self, senses: dict[str, list[tuple[str, str]]]):
        self.senses = senses

    @classmethod
    def from_entries(cls, entries: list[tuple[str, str, str]]) -> "TermDictionary":
        senses: dict[str, list[tuple[str, str]]] = {}
        for surface, cd, name in entries:
            surface = " ".join(surface.lower().split())
            if not surface:
                raise DictLoadError("empty surface form")
            senses.setdefault(surface, []).append((cd, name))
        return cls(senses)

    @classmethod
    def load(cls, path: str) -> "TermDictionary":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DictLoadError(f"{path}:{line_no}: expected surface<TAB>cd<TAB>name")
                entries.append((parts[0], parts[1], parts[2]))
        return cls.from_entries(entries)


@dataclass(frozen=True)
class TermMatch:
    start: int
    end: int
    surface: str
    senses: tuple[tuple[str, str], ...]


def find_matches(text: str, dictionary: TermDictionary) -> list[TermMatch]:
    """Case-insensitive whole-word matches outside commands, math, comments."""
    masked = stex.masked_spans(stex.tokenize(text))

    def is_masked(lo: int, hi: int) -> bool:
        return any(lo < m_hi and m_lo < hi for m_lo, m_hi in masked)

    lower = text.lower()
    candidates = []
    for surface, senses in dictionary.senses.items():
        pattern = r"(?<!\w)" + re.escape(surface) + r"(?!\w)"
        for hit in re.finditer(pattern, lower):
            if not is_masked(hit.start(), hit.end()):
                candidates.append((hit.start(), -(hit.end() - hit.start()), surface, senses))
    candidates.sort()
    out: list[TermMatch] = []
    busy_until = -1
    for start, neg_len, surface, senses in candidates:
        end = start - neg_len
        if start >= busy_until:
            out.append(TermMatch(start, end, surface, tuple(senses)))
            busy_until = end
    return out


def spot_targets(doc: Document, matches: list[TermMatch]) -> list[dict[str, str]]:
    cells: list[dict[str, str]] = [{} for _ in range(len(doc))]
    for index, match in enumerate(matches):
        for i in range(match.start, match.end):
            cells[i] = {SPOT_KEY: "1", UI_KEY: f"{MENU_PREFIX}.{index}"}
    return cells


def annotation_for(match: TermMatch, cd: str, name: str) -> dict:
    """The edit a context-menu choice asks the editor to perform."""
    return {
        "kind": "wrap",
        "begin": match.start,
        "end": match.end,
        "prefix": "\\termref{cd=%s, name=%s}{" % (cd, name),
        "suffix": "}",
    }


class Spotter:
    """Service handler with a latency-simulating worker thread."""

    def __init__(
        self,
        dictionary: TermDictionary,
        latency_ms: int = 0,
        cancel_on_conflict: bool = True,
    ):
        self.dictionary = dictionary
        self.latency_ms = latency_ms
        self.cancel_on_conflict = cancel_on_conflict
        self.matches: list[TermMatch] = []
        self._dirty = threading.Event()
        self._worker: threading.Thread | None = None
        self._runner: ServiceRunner | None = None

    # -- SDK hooks -----------------------------------------------------------

    def on_change(self, runner: ServiceRunner, update: Changeset | None) -> None:
        if self._worker is None:
            self._runner = runner
            self._worker = threading.Thread(
                target=self._work, daemon=True, name="spotter-worker"
            )
            self._worker.start()
        self._dirty.set()

    def on_reject(self, runner: ServiceRunner, reason: str) -> None:
        self._dirty.set()  # restart on the current head

    def on_event(self, runner: ServiceRunner, event: Event) -> list:
        if not event.uri.startswith(MENU_PREFIX + "."):
            return []
        suffix = event.uri[len(MENU_PREFIX) + 1 :]
        try:
            index = int(suffix)
        except ValueError:
            return []
        with runner.lock:
            doc = runner.doc
            if not 0 <= index < len(self.matches):
                return []  # unknown match index: stale menu
            match = self.matches[index]
            if (
                match.end > len(doc)
                or doc.text[match.start : match.end].lower() != match.surface
            ):
                return []  # document moved on under the menu
        return [
            {
                "label": f"Annotate as {cd}/{name}",
                "action": annotation_for(match, cd, name),
            }
            for cd, name in match.senses
        ]

    # -- processing ----------------------------------------------------------

    def _work(self) -> None:
        runner = self._runner
        assert runner is not None
        while not runner.stopped:
            if not self._dirty.wait(timeout=0.2):
                continue
            self._dirty.clear()
            with runner.lock:
                rev, doc = runner.snapshot()
                matches = find_matches(doc.text, self.dictionary)
                token = runner.new_token([(m.start, m.end) for m in matches])
            self._simulate_latency(runner, token)
            if runner.stopped:
                return
            if token.cancelled and self.cancel_on_conflict:
                self._dirty.set()  # reprocess against the newer document
                continue
            layer = OwnedAttrLayer(frozenset({SPOT_KEY, UI_KEY}))
            layer.reload_from(doc)
            diff = layer.diff_to(spot_targets(doc, matches), doc)
            with runner.lock:
                self.matches = matches
                if not diff.is_identity():
                    runner.submit(rev, diff)

    def _simulate_latency(self, runner: ServiceRunner, token) -> None:
        remaining = self.latency_ms / 1000.0
        while remaining > 0 and not runner.stopped:
            if token.cancelled and self.cancel_on_conflict:
                return
            step = min(0.01, remaining)
            time.sleep(step)
            remaining -= step
