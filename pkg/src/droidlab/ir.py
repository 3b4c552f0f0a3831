"""Canonical app intermediate representation and its on-disk corpus format.

Every producer in the pipeline (APK parser, synthetic generator, obfuscator)
emits :class:`AppRecord`; every consumer (featurizers, dataset ops) reads it.
Real and synthetic apps are indistinguishable downstream.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, NamedTuple

CORPUS_FORMAT = "droidlab-corpus"
CORPUS_VERSION = 1

# Mnemonics that terminate a straight-line instruction run.
CONTROL_TRANSFER_PREFIXES = ("if-", "goto", "return", "throw", "packed-switch", "sparse-switch")


class CorpusError(ValueError):
    """Malformed corpus file or record failing validation."""


class YearMonth(NamedTuple):
    year: int
    month: int

    def index(self) -> int:
        """Serial month number, usable for ordering and arithmetic."""
        return self.year * 12 + (self.month - 1)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    @classmethod
    def parse(cls, text: str) -> "YearMonth":
        try:
            y, m = text.split("-")
            return cls(int(y), int(m))
        except ValueError as exc:
            raise CorpusError(f"bad year-month {text!r}") from exc

    @classmethod
    def from_index(cls, idx: int) -> "YearMonth":
        return cls(idx // 12, idx % 12 + 1)


class Source(str, Enum):
    MARKET = "market"
    MALWARE_REPO = "malware-repo"
    SYNTHETIC = "synthetic"


class ComponentKind(str, Enum):
    ACTIVITY = "activity"
    SERVICE = "service"
    RECEIVER = "receiver"
    PROVIDER = "provider"


class CalleeKind(str, Enum):
    API = "api"
    USER = "user"


class ObfuscationTag(str, Enum):
    RENAMING = "renaming"
    CODE_STRUCTURE = "code-structure"
    ENCRYPTION = "encryption"


class ClassLabel(int, Enum):
    """Binary class for classifiers; greyware never enters training sets."""

    GOODWARE = 0
    MALWARE = 1
    GREYWARE = 2

    @property
    def letter(self) -> str:
        return {ClassLabel.GOODWARE: "G", ClassLabel.GREYWARE: "X", ClassLabel.MALWARE: "M"}[self]


def is_control_transfer(mnemonic: str) -> bool:
    return mnemonic.startswith(CONTROL_TRANSFER_PREFIXES)


def block_fingerprint(opcodes: Iterable[str]) -> str:
    """Stable fingerprint of one straight-line opcode run (operands ignored)."""
    h = hashlib.sha256("\n".join(opcodes).encode("utf-8")).hexdigest()
    return h[:16]


def derive_basic_blocks(opcode_sequences: list[tuple[str, tuple[str, ...]]]) -> dict[str, int]:
    """Recompute the basic-block multiset from opcode runs.

    Each sequence entry is one straight-line run in code order; a control
    transfer inside an entry additionally closes a block there.  This is the
    single canonical derivation used by parsers, generators and obfuscators,
    so the stored multiset is always reproducible from the sequences alone.
    """
    blocks: dict[str, int] = {}
    for _method, opcodes in opcode_sequences:
        run: list[str] = []
        for op in opcodes:
            run.append(op)
            if is_control_transfer(op):
                fp = block_fingerprint(run)
                blocks[fp] = blocks.get(fp, 0) + 1
                run = []
        if run:
            fp = block_fingerprint(run)
            blocks[fp] = blocks.get(fp, 0) + 1
    return blocks


@dataclass(frozen=True)
class AppRecord:
    """One app's statically observable facts plus labeling metadata.

    Immutable after construction; safe to share across workers.  family_id
    and obfuscation_tags are evaluation metadata and are never featurized.
    """

    id: str
    timestamp: YearMonth
    source: Source
    vtd: int
    permissions: frozenset[str] = frozenset()
    app_components: frozenset[tuple[ComponentKind, str]] = frozenset()
    intent_actions: frozenset[str] = frozenset()
    hw_sw_features: frozenset[str] = frozenset()
    strings: frozenset[str] = frozenset()
    api_calls: dict[str, int] = field(default_factory=dict)
    user_methods: frozenset[str] = frozenset()
    opcode_sequences: tuple[tuple[str, tuple[str, ...]], ...] = ()
    basic_blocks: dict[str, int] = field(default_factory=dict)
    call_edges: frozenset[tuple[str, str, CalleeKind]] = frozenset()
    family_id: str | None = None
    obfuscation_tags: frozenset[ObfuscationTag] = frozenset()

    def validate(self) -> None:
        """Check every structural invariant; raises CorpusError naming the breach."""
        if not self.id:
            raise CorpusError("record with empty id")
        if self.vtd < 0:
            raise CorpusError(f"record {self.id}: vtd must be >= 0, got {self.vtd}")
        if not 1 <= self.timestamp.month <= 12:
            raise CorpusError(
                f"record {self.id}: month must be in [1,12], got {self.timestamp.month}"
            )
        for name, count in self.api_calls.items():
            if count < 1:
                raise CorpusError(f"record {self.id}: api_calls[{name!r}] count {count} < 1")
        for caller, callee, kind in self.call_edges:
            if kind == CalleeKind.API and callee not in self.api_calls:
                raise CorpusError(
                    f"record {self.id}: api call edge to {callee!r} missing from api_calls"
                )
        for method, _ in self.opcode_sequences:
            if method not in self.user_methods:
                raise CorpusError(
                    f"record {self.id}: opcode sequence for unknown method {method!r}"
                )
        derived = derive_basic_blocks(list(self.opcode_sequences))
        if derived != self.basic_blocks:
            raise CorpusError(
                f"record {self.id}: basic_blocks do not match re-derivation from opcode_sequences"
            )

    def replace(self, **changes) -> "AppRecord":
        from dataclasses import replace as _replace

        return _replace(self, **changes)


def record_to_dict(record: AppRecord) -> dict:
    """Canonical JSON-serializable form (all collections sorted)."""
    return {
        "id": record.id,
        "timestamp": str(record.timestamp),
        "source": record.source.value,
        "vtd": record.vtd,
        "permissions": sorted(record.permissions),
        "app_components": [[k.value, n] for k, n in sorted(record.app_components)],
        "intent_actions": sorted(record.intent_actions),
        "hw_sw_features": sorted(record.hw_sw_features),
        "strings": sorted(record.strings),
        "api_calls": {k: record.api_calls[k] for k in sorted(record.api_calls)},
        "user_methods": sorted(record.user_methods),
        "opcode_sequences": [[m, list(ops)] for m, ops in record.opcode_sequences],
        "basic_blocks": {k: record.basic_blocks[k] for k in sorted(record.basic_blocks)},
        "call_edges": [[c, t, k.value] for c, t, k in sorted(record.call_edges)],
        "family_id": record.family_id,
        "obfuscation_tags": sorted(t.value for t in record.obfuscation_tags),
    }


def record_from_dict(data: dict) -> AppRecord:
    try:
        return AppRecord(
            id=data["id"],
            timestamp=YearMonth.parse(data["timestamp"]),
            source=Source(data["source"]),
            vtd=int(data["vtd"]),
            permissions=frozenset(data["permissions"]),
            app_components=frozenset(
                (ComponentKind(k), n) for k, n in data["app_components"]
            ),
            intent_actions=frozenset(data["intent_actions"]),
            hw_sw_features=frozenset(data["hw_sw_features"]),
            strings=frozenset(data["strings"]),
            api_calls={k: int(v) for k, v in data["api_calls"].items()},
            user_methods=frozenset(data["user_methods"]),
            opcode_sequences=tuple((m, tuple(ops)) for m, ops in data["opcode_sequences"]),
            basic_blocks={k: int(v) for k, v in data["basic_blocks"].items()},
            call_edges=frozenset((c, t, CalleeKind(k)) for c, t, k in data["call_edges"]),
            family_id=data.get("family_id"),
            obfuscation_tags=frozenset(ObfuscationTag(t) for t in data["obfuscation_tags"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"malformed record object: {exc}") from exc


def serialize_corpus(records: list[AppRecord], destination: IO[str]) -> int:
    """Write records as a versioned, line-delimited JSON corpus.

    Returns the number of bytes written.  Rejects duplicate ids; the output
    round-trips bit-exactly through :func:`parse_corpus`.
    """
    if not records:
        raise CorpusError("refusing to serialize an empty corpus")
    seen: set[str] = set()
    for r in records:
        if r.id in seen:
            raise CorpusError(f"duplicate record id {r.id!r}")
        seen.add(r.id)
    header = json.dumps(
        {"format": CORPUS_FORMAT, "version": CORPUS_VERSION, "records": len(records)},
        sort_keys=True,
    )
    written = destination.write(header + "\n")
    for r in records:
        line = json.dumps(record_to_dict(r), sort_keys=True, separators=(",", ":"))
        written += destination.write(line + "\n")
    return written


def parse_corpus(source: IO[str]) -> list[AppRecord]:
    """Read a corpus stream, validating every record invariant on load."""
    first = source.readline()
    if not first:
        raise CorpusError("empty corpus stream")
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"line 1: bad corpus header: {exc}") from exc
    if header.get("format") != CORPUS_FORMAT:
        raise CorpusError(f"line 1: not a {CORPUS_FORMAT} file")
    if header.get("version") != CORPUS_VERSION:
        raise CorpusError(f"line 1: unsupported corpus version {header.get('version')!r}")

    records: list[AppRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(source, start=2):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed record: {exc}") from exc
        record = record_from_dict(data)
        record.validate()
        if record.id in seen:
            raise CorpusError(f"line {lineno}: duplicate record id {record.id!r}")
        seen.add(record.id)
        records.append(record)
    return records


def save_corpus(records: list[AppRecord], path) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        return serialize_corpus(records, fh)


def load_corpus(path) -> list[AppRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_corpus(fh)
