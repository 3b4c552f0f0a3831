"""Structural parser for Dalvik executable (DEX) files.

Total over arbitrary byte input: every malformed input raises
:class:`DexFormatError` carrying the section and offset of the violation,
never any other exception.  Only the tables the static analyzer consumes are
materialized (strings, types, protos, methods, class definitions and their
code items).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import dalvik

HEADER_SIZE = 0x70
ENDIAN_CONSTANT = 0x12345678
REVERSE_ENDIAN_CONSTANT = 0x78563412


class DexFormatError(ValueError):
    def __init__(self, section: str, offset: int, message: str):
        super().__init__(f"{section} @0x{offset:x}: {message}")
        self.section = section
        self.offset = offset


class _Reader:
    """Bounds-checked little-endian cursor over the file bytes."""

    def __init__(self, data: bytes, section: str, pos: int = 0):
        self.data = data
        self.section = section
        self.pos = pos

    def fail(self, message: str):
        raise DexFormatError(self.section, self.pos, message)

    def _take(self, n: int) -> bytes:
        if self.pos < 0 or self.pos + n > len(self.data):
            self.fail(f"read of {n} bytes past end of file")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u1(self) -> int:
        return self._take(1)[0]

    def u2(self) -> int:
        b = self._take(2)
        return b[0] | (b[1] << 8)

    def u4(self) -> int:
        b = self._take(4)
        return b[0] | (b[1] << 8) | (b[2] << 16) | (b[3] << 24)

    def uleb128(self) -> int:
        result = 0
        shift = 0
        for _ in range(5):
            byte = self.u1()
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7
        self.fail("uleb128 longer than 5 bytes")


def _decode_mutf8(raw: bytes, section: str, offset: int) -> str:
    units: list[int] = []
    i = 0
    n = len(raw)
    while i < n:
        b0 = raw[i]
        if b0 < 0x80:
            units.append(b0)
            i += 1
        elif b0 >> 5 == 0b110:
            if i + 1 >= n or raw[i + 1] >> 6 != 0b10:
                raise DexFormatError(section, offset + i, "truncated 2-byte MUTF-8 sequence")
            units.append(((b0 & 0x1F) << 6) | (raw[i + 1] & 0x3F))
            i += 2
        elif b0 >> 4 == 0b1110:
            if i + 2 >= n or raw[i + 1] >> 6 != 0b10 or raw[i + 2] >> 6 != 0b10:
                raise DexFormatError(section, offset + i, "truncated 3-byte MUTF-8 sequence")
            units.append(((b0 & 0x0F) << 12) | ((raw[i + 1] & 0x3F) << 6) | (raw[i + 2] & 0x3F))
            i += 3
        else:
            raise DexFormatError(section, offset + i, f"invalid MUTF-8 lead byte 0x{b0:02x}")
    text = "".join(map(chr, units))
    try:
        # Combine CESU-8 style surrogate pairs into real code points.
        return text.encode("utf-16-le", "surrogatepass").decode("utf-16-le")
    except UnicodeDecodeError:
        return text


@dataclass
class Instruction:
    addr: int  # code-unit offset within the method
    opcode: int
    mnemonic: str
    units: list[int]


@dataclass
class SwitchPayload:
    targets: list[int]  # relative offsets, applied to the switch instruction addr


@dataclass
class CodeItem:
    registers_size: int
    insns_size: int
    instructions: list[Instruction]
    payloads: dict[int, SwitchPayload] = field(default_factory=dict)


@dataclass
class EncodedMethod:
    method_idx: int
    access_flags: int
    code: CodeItem | None


@dataclass
class ClassDef:
    type_idx: int
    descriptor: str
    methods: list[EncodedMethod]


@dataclass
class DexHeader:
    version: str
    file_size: int
    endian_tag: int
    string_ids_size: int
    string_ids_off: int
    type_ids_size: int
    type_ids_off: int
    proto_ids_size: int
    proto_ids_off: int
    field_ids_size: int
    field_ids_off: int
    method_ids_size: int
    method_ids_off: int
    class_defs_size: int
    class_defs_off: int
    data_size: int
    data_off: int


@dataclass
class DexFile:
    header: DexHeader
    strings: list[str]
    type_descriptors: list[str]
    protos: list[tuple[str, int]]  # (shorty, return type idx)
    method_ids: list[tuple[int, int, int]]  # (class type idx, proto idx, name string idx)
    class_defs: list[ClassDef]

    def method_name(self, method_idx: int) -> str:
        class_idx, _proto, name_idx = self.method_ids[method_idx]
        return f"{self.type_descriptors[class_idx]}->{self.strings[name_idx]}"

    def method_class(self, method_idx: int) -> str:
        return self.type_descriptors[self.method_ids[method_idx][0]]

    @property
    def defined_classes(self) -> set[str]:
        return {cd.descriptor for cd in self.class_defs}


def _check_section(data: bytes, name: str, off: int, count: int, entry_size: int):
    if count == 0:
        return
    end = off + count * entry_size
    if off < HEADER_SIZE or end > len(data) or end < off:
        raise DexFormatError(name, off, f"{count} entries of {entry_size} bytes exceed file bounds")


def _parse_header(data: bytes) -> DexHeader:
    if len(data) < HEADER_SIZE:
        raise DexFormatError("header", 0, f"file shorter than {HEADER_SIZE}-byte header")
    magic = data[0:8]
    if magic[:4] != b"dex\n" or magic[7:8] != b"\x00" or not magic[4:7].isdigit():
        raise DexFormatError("header", 0, f"bad magic {magic!r}")
    r = _Reader(data, "header", 0x20)
    file_size = r.u4()
    header_size = r.u4()
    endian_tag = r.u4()
    if endian_tag == REVERSE_ENDIAN_CONSTANT:
        raise DexFormatError("header", 0x28, "big-endian files are not supported")
    if endian_tag != ENDIAN_CONSTANT:
        raise DexFormatError("header", 0x28, f"bad endian tag 0x{endian_tag:08x}")
    if header_size < HEADER_SIZE:
        raise DexFormatError("header", 0x24, f"header size {header_size} too small")
    if file_size != len(data):
        raise DexFormatError("header", 0x20, f"declared size {file_size} != actual {len(data)}")
    r.u4()  # link_size
    r.u4()  # link_off
    r.u4()  # map_off
    vals = [r.u4() for _ in range(14)]
    hdr = DexHeader(
        version=magic[4:7].decode("ascii"),
        file_size=file_size,
        endian_tag=endian_tag,
        string_ids_size=vals[0], string_ids_off=vals[1],
        type_ids_size=vals[2], type_ids_off=vals[3],
        proto_ids_size=vals[4], proto_ids_off=vals[5],
        field_ids_size=vals[6], field_ids_off=vals[7],
        method_ids_size=vals[8], method_ids_off=vals[9],
        class_defs_size=vals[10], class_defs_off=vals[11],
        data_size=vals[12], data_off=vals[13],
    )
    _check_section(data, "string_ids", hdr.string_ids_off, hdr.string_ids_size, 4)
    _check_section(data, "type_ids", hdr.type_ids_off, hdr.type_ids_size, 4)
    _check_section(data, "proto_ids", hdr.proto_ids_off, hdr.proto_ids_size, 12)
    _check_section(data, "field_ids", hdr.field_ids_off, hdr.field_ids_size, 8)
    _check_section(data, "method_ids", hdr.method_ids_off, hdr.method_ids_size, 8)
    _check_section(data, "class_defs", hdr.class_defs_off, hdr.class_defs_size, 32)
    return hdr


def _parse_strings(data: bytes, hdr: DexHeader) -> list[str]:
    strings: list[str] = []
    ids = _Reader(data, "string_ids", hdr.string_ids_off)
    for i in range(hdr.string_ids_size):
        off = ids.u4()
        r = _Reader(data, "string_data", off)
        r.uleb128()  # utf16 length; data below is authoritative
        start = r.pos
        end = data.find(b"\x00", start)
        if end < 0:
            raise DexFormatError("string_data", start, f"string {i} missing NUL terminator")
        strings.append(_decode_mutf8(data[start:end], "string_data", start))
    return strings


def _parse_code_item(data: bytes, off: int) -> CodeItem:
    r = _Reader(data, "code_item", off)
    registers_size = r.u2()
    r.u2()  # ins
    r.u2()  # outs
    r.u2()  # tries
    r.u4()  # debug_info_off
    insns_size = r.u4()
    if r.pos + insns_size * 2 > len(data):
        raise DexFormatError("code_item", off, f"{insns_size} code units exceed file bounds")
    base = r.pos
    units = [data[base + 2 * i] | (data[base + 2 * i + 1] << 8) for i in range(insns_size)]

    instructions: list[Instruction] = []
    payloads: dict[int, SwitchPayload] = {}
    pos = 0
    while pos < insns_size:
        unit0 = units[pos]
        op = unit0 & 0xFF
        if op == 0x00 and unit0 != 0x0000:
            if unit0 == dalvik.PACKED_SWITCH_PAYLOAD:
                if pos + 4 > insns_size:
                    raise DexFormatError("code_item", off, "truncated packed-switch payload")
                size = units[pos + 1]
                width = size * 2 + 4
                if pos + width > insns_size:
                    raise DexFormatError("code_item", off, "packed-switch payload overruns code")
                targets = [
                    _s32(units[pos + 4 + 2 * i], units[pos + 5 + 2 * i]) for i in range(size)
                ]
                payloads[pos] = SwitchPayload(targets)
            elif unit0 == dalvik.SPARSE_SWITCH_PAYLOAD:
                if pos + 2 > insns_size:
                    raise DexFormatError("code_item", off, "truncated sparse-switch payload")
                size = units[pos + 1]
                width = size * 4 + 2
                if pos + width > insns_size:
                    raise DexFormatError("code_item", off, "sparse-switch payload overruns code")
                tbase = pos + 2 + 2 * size
                targets = [
                    _s32(units[tbase + 2 * i], units[tbase + 2 * i + 1]) for i in range(size)
                ]
                payloads[pos] = SwitchPayload(targets)
            elif unit0 == dalvik.FILL_ARRAY_PAYLOAD:
                if pos + 4 > insns_size:
                    raise DexFormatError("code_item", off, "truncated fill-array payload")
                element_width = units[pos + 1]
                count = units[pos + 2] | (units[pos + 3] << 16)
                width = (count * element_width + 1) // 2 + 4
                if pos + width > insns_size:
                    raise DexFormatError("code_item", off, "fill-array payload overruns code")
            else:
                raise DexFormatError("code_item", off, f"unknown payload ident 0x{unit0:04x}")
            pos += width
            continue
        name, fmt = dalvik.OPCODE_TABLE[op]
        if name == "unused":
            raise DexFormatError("code_item", off + 16 + pos * 2, f"unused opcode 0x{op:02x}")
        width = dalvik.FORMAT_UNITS[fmt]
        if pos + width > insns_size:
            raise DexFormatError("code_item", off + 16 + pos * 2, f"truncated {name}")
        instructions.append(Instruction(pos, op, name, units[pos:pos + width]))
        pos += width
    return CodeItem(registers_size, insns_size, instructions, payloads)


def _s32(lo: int, hi: int) -> int:
    v = lo | (hi << 16)
    return v - 0x100000000 if v >= 0x80000000 else v


def _parse_class_data(data: bytes, off: int, dex_method_count: int) -> list[EncodedMethod]:
    r = _Reader(data, "class_data", off)
    static_fields = r.uleb128()
    instance_fields = r.uleb128()
    direct_methods = r.uleb128()
    virtual_methods = r.uleb128()
    budget = len(data)
    for count in (static_fields, instance_fields, direct_methods, virtual_methods):
        if count > budget:
            raise DexFormatError("class_data", off, f"implausible member count {count}")
    for _ in range(static_fields + instance_fields):
        r.uleb128()  # field_idx_diff
        r.uleb128()  # access_flags
    methods: list[EncodedMethod] = []
    for group_count in (direct_methods, virtual_methods):
        method_idx = 0
        for _ in range(group_count):
            method_idx += r.uleb128()
            access = r.uleb128()
            code_off = r.uleb128()
            if method_idx >= dex_method_count:
                raise DexFormatError(
                    "method_ids", r.pos, f"encoded method index {method_idx} out of range"
                )
            code = _parse_code_item(data, code_off) if code_off else None
            methods.append(EncodedMethod(method_idx, access, code))
    return methods


def parse_dex(data: bytes) -> DexFile:
    """Parse one classes.dex blob into its structural model."""
    hdr = _parse_header(data)
    strings = _parse_strings(data, hdr)

    types: list[str] = []
    r = _Reader(data, "type_ids", hdr.type_ids_off)
    for i in range(hdr.type_ids_size):
        idx = r.u4()
        if idx >= len(strings):
            raise DexFormatError("type_ids", r.pos - 4, f"type {i} string index {idx} out of range")
        types.append(strings[idx])

    protos: list[tuple[str, int]] = []
    r = _Reader(data, "proto_ids", hdr.proto_ids_off)
    for i in range(hdr.proto_ids_size):
        shorty_idx = r.u4()
        return_idx = r.u4()
        r.u4()  # parameters_off
        if shorty_idx >= len(strings) or return_idx >= len(types):
            raise DexFormatError("proto_ids", r.pos - 12, f"proto {i} index out of range")
        protos.append((strings[shorty_idx], return_idx))

    method_ids: list[tuple[int, int, int]] = []
    r = _Reader(data, "method_ids", hdr.method_ids_off)
    for i in range(hdr.method_ids_size):
        class_idx = r.u2()
        proto_idx = r.u2()
        name_idx = r.u4()
        if class_idx >= len(types) or proto_idx >= len(protos) or name_idx >= len(strings):
            raise DexFormatError("method_ids", r.pos - 8, f"method {i} index out of range")
        method_ids.append((class_idx, proto_idx, name_idx))

    class_defs: list[ClassDef] = []
    r = _Reader(data, "class_defs", hdr.class_defs_off)
    for i in range(hdr.class_defs_size):
        class_idx = r.u4()
        r.u4()  # access_flags
        r.u4()  # superclass_idx
        r.u4()  # interfaces_off
        r.u4()  # source_file_idx
        r.u4()  # annotations_off
        class_data_off = r.u4()
        r.u4()  # static_values_off
        if class_idx >= len(types):
            raise DexFormatError("class_defs", r.pos - 32, f"class {i} type index out of range")
        methods = (
            _parse_class_data(data, class_data_off, len(method_ids)) if class_data_off else []
        )
        class_defs.append(ClassDef(class_idx, types[class_idx], methods))

    # Instruction-level index references.
    for cd in class_defs:
        for em in cd.methods:
            if em.code is None:
                continue
            for ins in em.code.instructions:
                midx = dalvik.invoke_method_index(ins.opcode, ins.units)
                if midx is not None and midx >= len(method_ids):
                    raise DexFormatError(
                        "method_ids", 0, f"invoke references method index {midx} out of range"
                    )
                if ins.opcode in dalvik.CONST_STRING_OPCODES:
                    sidx = ins.units[1] if ins.opcode == 0x1A else (
                        ins.units[1] | (ins.units[2] << 16)
                    )
                    if sidx >= len(strings):
                        raise DexFormatError(
                            "string_ids", 0, f"const-string index {sidx} out of range"
                        )

    return DexFile(hdr, strings, types, protos, method_ids, class_defs)
