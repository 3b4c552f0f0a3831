"""APK (ZIP container) to AppRecord extraction.

Pulls the manifest and every classes*.dex entry, merges code facts across dex
files, and classifies callees against the union of classes defined anywhere
in the package.
"""

from __future__ import annotations

import hashlib
import io
import re
import zipfile

from .axml import AxmlFormatError, parse_axml
from .callgraph import callee_kind, extract_method_facts
from .dex import DexFormatError, parse_dex
from .ir import AppRecord, Source, YearMonth, derive_basic_blocks

_DEX_NAME = re.compile(r"^classes(\d*)\.dex$")


class ApkFormatError(ValueError):
    pass


def parse_apk(
    apk_bytes: bytes,
    *,
    timestamp: YearMonth = YearMonth(1970, 1),
    source: Source = Source.MARKET,
    vtd: int = 0,
) -> AppRecord:
    """Extract an AppRecord from APK bytes.

    vtd and timestamp are caller-provided defaults pending annotation; the
    record id is the content digest of the package.
    """
    try:
        zf = zipfile.ZipFile(io.BytesIO(apk_bytes))
        names = zf.namelist()
    except zipfile.BadZipFile as exc:
        raise ApkFormatError(f"not a ZIP archive: {exc}") from exc

    if "AndroidManifest.xml" not in names:
        raise ApkFormatError("APK has no AndroidManifest.xml entry")
    try:
        manifest = parse_axml(zf.read("AndroidManifest.xml"))
    except AxmlFormatError as exc:
        raise ApkFormatError(f"AndroidManifest.xml: {exc}") from exc

    dex_names = sorted(
        (n for n in names if _DEX_NAME.match(n)),
        key=lambda n: int(_DEX_NAME.match(n).group(1) or 1),
    )
    dex_files = []
    for name in dex_names:
        try:
            dex_files.append(parse_dex(zf.read(name)))
        except DexFormatError as exc:
            raise ApkFormatError(f"{name}: {exc}") from exc

    defined_classes: set[str] = set()
    for dex in dex_files:
        defined_classes |= dex.defined_classes

    strings: set[str] = set()
    api_calls: dict[str, int] = {}
    user_methods: set[str] = set()
    opcode_sequences: list[tuple[str, tuple[str, ...]]] = []
    call_edges = set()
    for dex in dex_files:
        for mf in extract_method_facts(dex):
            user_methods.add(mf.name)
            strings |= mf.const_strings
            for run in mf.block_opcodes:
                opcode_sequences.append((mf.name, run))
            for callee, count in mf.invokes.items():
                kind = callee_kind(callee, defined_classes)
                call_edges.add((mf.name, callee, kind))
                if kind.value == "api":
                    api_calls[callee] = api_calls.get(callee, 0) + count

    record = AppRecord(
        id=hashlib.sha256(apk_bytes).hexdigest(),
        timestamp=timestamp,
        source=source,
        vtd=vtd,
        permissions=frozenset(manifest.permissions),
        app_components=frozenset(manifest.components),
        intent_actions=frozenset(manifest.intent_actions),
        hw_sw_features=frozenset(manifest.features),
        strings=frozenset(strings),
        api_calls=api_calls,
        user_methods=frozenset(user_methods),
        opcode_sequences=tuple(opcode_sequences),
        basic_blocks=derive_basic_blocks(opcode_sequences),
        call_edges=frozenset(call_edges),
    )
    record.validate()
    return record
