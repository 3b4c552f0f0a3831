"""Android manifest parsing: binary XML chunks, with a plain-text fallback.

The binary decoder walks the chunk stream (string pool, namespaces, start and
end elements) and resolves attribute values through the string pool.  Plain
XML is accepted as well so fixtures stay human-readable without bypassing the
binary code path in tests that target it.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .ir import ComponentKind

ANDROID_NS = "http://schemas.android.com/apk/res/android"

RES_XML_TYPE = 0x0003
RES_STRING_POOL_TYPE = 0x0001
RES_XML_RESOURCE_MAP_TYPE = 0x0180
RES_XML_START_NAMESPACE_TYPE = 0x0100
RES_XML_END_NAMESPACE_TYPE = 0x0101
RES_XML_START_ELEMENT_TYPE = 0x0102
RES_XML_END_ELEMENT_TYPE = 0x0103
RES_XML_CDATA_TYPE = 0x0104

UTF8_FLAG = 1 << 8

_COMPONENT_TAGS = {
    "activity": ComponentKind.ACTIVITY,
    "activity-alias": ComponentKind.ACTIVITY,
    "service": ComponentKind.SERVICE,
    "receiver": ComponentKind.RECEIVER,
    "provider": ComponentKind.PROVIDER,
}


class AxmlFormatError(ValueError):
    pass


@dataclass
class ManifestModel:
    package: str = ""
    permissions: set[str] = field(default_factory=set)
    components: set[tuple[ComponentKind, str]] = field(default_factory=set)
    intent_actions: set[str] = field(default_factory=set)
    features: set[str] = field(default_factory=set)


def _u2(data: bytes, pos: int) -> int:
    if pos + 2 > len(data):
        raise AxmlFormatError(f"u2 read past end at 0x{pos:x}")
    return data[pos] | (data[pos + 1] << 8)


def _u4(data: bytes, pos: int) -> int:
    if pos + 4 > len(data):
        raise AxmlFormatError(f"u4 read past end at 0x{pos:x}")
    return data[pos] | (data[pos + 1] << 8) | (data[pos + 2] << 16) | (data[pos + 3] << 24)


def _parse_string_pool(data: bytes, chunk_off: int, chunk_size: int) -> list[str]:
    count = _u4(data, chunk_off + 8)
    flags = _u4(data, chunk_off + 16)
    strings_start = _u4(data, chunk_off + 20)
    utf8 = bool(flags & UTF8_FLAG)
    pool: list[str] = []
    for i in range(count):
        rel = _u4(data, chunk_off + 28 + 4 * i)
        pos = chunk_off + strings_start + rel
        if pos >= chunk_off + chunk_size:
            raise AxmlFormatError(f"string {i} offset outside pool chunk")
        if utf8:
            # utf16 length then byte length, each with one-byte high-bit extension
            pos += 2 if data[pos] & 0x80 else 1
            blen = data[pos]
            if blen & 0x80:
                blen = ((blen & 0x7F) << 8) | data[pos + 1]
                pos += 2
            else:
                pos += 1
            raw = data[pos:pos + blen]
            try:
                pool.append(raw.decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise AxmlFormatError(f"string {i}: malformed UTF-8: {exc}") from exc
        else:
            clen = _u2(data, pos)
            pos += 2
            if clen & 0x8000:
                clen = ((clen & 0x7FFF) << 16) | _u2(data, pos)
                pos += 2
            raw = data[pos:pos + 2 * clen]
            if len(raw) < 2 * clen:
                raise AxmlFormatError(f"string {i}: UTF-16 data truncated")
            try:
                pool.append(raw.decode("utf-16-le"))
            except UnicodeDecodeError as exc:
                raise AxmlFormatError(f"string {i}: malformed UTF-16: {exc}") from exc
    return pool


def _pool_string(pool: list[str], idx: int) -> str:
    if idx >= len(pool):
        raise AxmlFormatError(f"string-pool index {idx} out of range ({len(pool)} entries)")
    return pool[idx]


def parse_binary_manifest(data: bytes) -> ManifestModel:
    if _u2(data, 0) != RES_XML_TYPE:
        raise AxmlFormatError("not a binary XML file")
    file_size = _u4(data, 4)
    if file_size > len(data):
        raise AxmlFormatError(f"declared size {file_size} exceeds data length {len(data)}")

    pool: list[str] = []
    model = ManifestModel()
    stack: list[str] = []

    pos = 8
    while pos + 8 <= file_size:
        ctype = _u2(data, pos)
        header_size = _u2(data, pos + 2)
        csize = _u4(data, pos + 4)
        if csize < 8 or pos + csize > file_size:
            raise AxmlFormatError(f"chunk at 0x{pos:x} overruns file")
        if ctype == RES_STRING_POOL_TYPE:
            pool = _parse_string_pool(data, pos, csize)
        elif ctype == RES_XML_START_ELEMENT_TYPE:
            name_idx = _u4(data, pos + 8 + 4)
            tag = _pool_string(pool, name_idx)
            attr_count = _u2(data, pos + 8 + 8 + 2 + 2)
            attrs: dict[tuple[str, str], str] = {}
            abase = pos + header_size
            for i in range(attr_count):
                apos = abase + 20 * i
                ans = _u4(data, apos)
                aname_idx = _u4(data, apos + 4)
                raw_value = _u4(data, apos + 8)
                dtype = data[apos + 15] if apos + 15 < len(data) else 0
                adata = _u4(data, apos + 16)
                aname = _pool_string(pool, aname_idx)
                ns = _pool_string(pool, ans) if ans != 0xFFFFFFFF else ""
                if raw_value != 0xFFFFFFFF:
                    value = _pool_string(pool, raw_value)
                elif dtype == 0x03:
                    value = _pool_string(pool, adata)
                else:
                    value = str(adata)
                attrs[(ns, aname)] = value
            _apply_element(model, tag, attrs, stack)
            stack.append(tag)
        elif ctype == RES_XML_END_ELEMENT_TYPE:
            if stack:
                stack.pop()
        elif ctype in (
            RES_XML_RESOURCE_MAP_TYPE,
            RES_XML_START_NAMESPACE_TYPE,
            RES_XML_END_NAMESPACE_TYPE,
            RES_XML_CDATA_TYPE,
        ):
            pass
        else:
            raise AxmlFormatError(f"unknown chunk type 0x{ctype:04x} at 0x{pos:x}")
        pos += csize
    return model


def _apply_element(model: ManifestModel, tag: str, attrs: dict, stack: list[str]):
    def android_name() -> str:
        return attrs.get((ANDROID_NS, "name"), attrs.get(("", "name"), ""))

    if tag == "manifest":
        model.package = attrs.get(("", "package"), "")
    elif tag == "uses-permission":
        name = android_name()
        if name:
            model.permissions.add(name)
    elif tag == "uses-feature":
        name = android_name()
        if name:
            model.features.add(name)
    elif tag in _COMPONENT_TAGS:
        name = android_name()
        if not name:
            raise AxmlFormatError(f"<{tag}> element with empty component name")
        model.components.add((_COMPONENT_TAGS[tag], name))
    elif tag == "action" and "intent-filter" in stack:
        name = android_name()
        if name:
            model.intent_actions.add(name)


def parse_text_manifest(text: str) -> ManifestModel:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise AxmlFormatError(f"malformed XML: {exc}") from exc
    model = ManifestModel()
    model.package = root.get("package", "")

    def name_of(el) -> str:
        return el.get(f"{{{ANDROID_NS}}}name", el.get("name", ""))

    for el in root.iter():
        tag = el.tag.split("}")[-1]
        if tag == "uses-permission":
            if name_of(el):
                model.permissions.add(name_of(el))
        elif tag == "uses-feature":
            if name_of(el):
                model.features.add(name_of(el))
        elif tag in _COMPONENT_TAGS:
            name = name_of(el)
            if not name:
                raise AxmlFormatError(f"<{tag}> element with empty component name")
            model.components.add((_COMPONENT_TAGS[tag], name))
        elif tag == "action":
            if name_of(el):
                model.intent_actions.add(name_of(el))
    return model


def parse_axml(data: bytes) -> ManifestModel:
    """Accepts compiled binary XML or plain-text XML bytes."""
    if len(data) >= 4 and _u2(data, 0) == RES_XML_TYPE:
        return parse_binary_manifest(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise AxmlFormatError(f"neither binary XML nor UTF-8 text: {exc}") from exc
    return parse_text_manifest(text)
