"""Dalvik instruction set: mnemonics, encoding formats and classification.

The table maps every opcode byte to its published mnemonic and format; the
format determines instruction width in 16-bit code units.  Only what the
static analyzer needs is modeled: widths, invoke method indices, branch
offsets and the conditional-inversion pairs.
"""

from __future__ import annotations

# Width of each encoding format, in 16-bit code units.
FORMAT_UNITS = {
    "10x": 1, "12x": 1, "11n": 1, "11x": 1, "10t": 1,
    "20t": 2, "22x": 2, "21t": 2, "21s": 2, "21h": 2, "21c": 2,
    "23x": 2, "22b": 2, "22t": 2, "22s": 2, "22c": 2,
    "30t": 3, "32x": 3, "31i": 3, "31t": 3, "31c": 3, "35c": 3, "3rc": 3,
    "45cc": 4, "4rcc": 4, "51l": 5,
}

_UNOPS = [
    "neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double",
    "int-to-long", "int-to-float", "int-to-double", "long-to-int",
    "long-to-float", "long-to-double", "float-to-int", "float-to-long",
    "float-to-double", "double-to-int", "double-to-long", "double-to-float",
    "int-to-byte", "int-to-char", "int-to-short",
]

_BINOPS = [
    "add-int", "sub-int", "mul-int", "div-int", "rem-int", "and-int",
    "or-int", "xor-int", "shl-int", "shr-int", "ushr-int",
    "add-long", "sub-long", "mul-long", "div-long", "rem-long", "and-long",
    "or-long", "xor-long", "shl-long", "shr-long", "ushr-long",
    "add-float", "sub-float", "mul-float", "div-float", "rem-float",
    "add-double", "sub-double", "mul-double", "div-double", "rem-double",
]

_LIT16 = ["add-int/lit16", "rsub-int", "mul-int/lit16", "div-int/lit16",
          "rem-int/lit16", "and-int/lit16", "or-int/lit16", "xor-int/lit16"]

_LIT8 = ["add-int/lit8", "rsub-int/lit8", "mul-int/lit8", "div-int/lit8",
         "rem-int/lit8", "and-int/lit8", "or-int/lit8", "xor-int/lit8",
         "shl-int/lit8", "shr-int/lit8", "ushr-int/lit8"]

_ARRAY_SUFFIXES = ["", "-wide", "-object", "-boolean", "-byte", "-char", "-short"]


def _build_table() -> list[tuple[str, str]]:
    t: list[tuple[str, str]] = [("unused", "10x")] * 256
    t[0x00] = ("nop", "10x")
    t[0x01] = ("move", "12x")
    t[0x02] = ("move/from16", "22x")
    t[0x03] = ("move/16", "32x")
    t[0x04] = ("move-wide", "12x")
    t[0x05] = ("move-wide/from16", "22x")
    t[0x06] = ("move-wide/16", "32x")
    t[0x07] = ("move-object", "12x")
    t[0x08] = ("move-object/from16", "22x")
    t[0x09] = ("move-object/16", "32x")
    t[0x0A] = ("move-result", "11x")
    t[0x0B] = ("move-result-wide", "11x")
    t[0x0C] = ("move-result-object", "11x")
    t[0x0D] = ("move-exception", "11x")
    t[0x0E] = ("return-void", "10x")
    t[0x0F] = ("return", "11x")
    t[0x10] = ("return-wide", "11x")
    t[0x11] = ("return-object", "11x")
    t[0x12] = ("const/4", "11n")
    t[0x13] = ("const/16", "21s")
    t[0x14] = ("const", "31i")
    t[0x15] = ("const/high16", "21h")
    t[0x16] = ("const-wide/16", "21s")
    t[0x17] = ("const-wide/32", "31i")
    t[0x18] = ("const-wide", "51l")
    t[0x19] = ("const-wide/high16", "21h")
    t[0x1A] = ("const-string", "21c")
    t[0x1B] = ("const-string/jumbo", "31c")
    t[0x1C] = ("const-class", "21c")
    t[0x1D] = ("monitor-enter", "11x")
    t[0x1E] = ("monitor-exit", "11x")
    t[0x1F] = ("check-cast", "21c")
    t[0x20] = ("instance-of", "22c")
    t[0x21] = ("array-length", "12x")
    t[0x22] = ("new-instance", "21c")
    t[0x23] = ("new-array", "22c")
    t[0x24] = ("filled-new-array", "35c")
    t[0x25] = ("filled-new-array/range", "3rc")
    t[0x26] = ("fill-array-data", "31t")
    t[0x27] = ("throw", "11x")
    t[0x28] = ("goto", "10t")
    t[0x29] = ("goto/16", "20t")
    t[0x2A] = ("goto/32", "30t")
    t[0x2B] = ("packed-switch", "31t")
    t[0x2C] = ("sparse-switch", "31t")
    t[0x2D] = ("cmpl-float", "23x")
    t[0x2E] = ("cmpg-float", "23x")
    t[0x2F] = ("cmpl-double", "23x")
    t[0x30] = ("cmpg-double", "23x")
    t[0x31] = ("cmp-long", "23x")
    t[0x32] = ("if-eq", "22t")
    t[0x33] = ("if-ne", "22t")
    t[0x34] = ("if-lt", "22t")
    t[0x35] = ("if-ge", "22t")
    t[0x36] = ("if-gt", "22t")
    t[0x37] = ("if-le", "22t")
    t[0x38] = ("if-eqz", "21t")
    t[0x39] = ("if-nez", "21t")
    t[0x3A] = ("if-ltz", "21t")
    t[0x3B] = ("if-gez", "21t")
    t[0x3C] = ("if-gtz", "21t")
    t[0x3D] = ("if-lez", "21t")
    for i, suf in enumerate(_ARRAY_SUFFIXES):
        t[0x44 + i] = (f"aget{suf}", "23x")
        t[0x4B + i] = (f"aput{suf}", "23x")
        t[0x52 + i] = (f"iget{suf}", "22c")
        t[0x59 + i] = (f"iput{suf}", "22c")
        t[0x60 + i] = (f"sget{suf}", "21c")
        t[0x67 + i] = (f"sput{suf}", "21c")
    t[0x6E] = ("invoke-virtual", "35c")
    t[0x6F] = ("invoke-super", "35c")
    t[0x70] = ("invoke-direct", "35c")
    t[0x71] = ("invoke-static", "35c")
    t[0x72] = ("invoke-interface", "35c")
    t[0x74] = ("invoke-virtual/range", "3rc")
    t[0x75] = ("invoke-super/range", "3rc")
    t[0x76] = ("invoke-direct/range", "3rc")
    t[0x77] = ("invoke-static/range", "3rc")
    t[0x78] = ("invoke-interface/range", "3rc")
    for i, name in enumerate(_UNOPS):
        t[0x7B + i] = (name, "12x")
    for i, name in enumerate(_BINOPS):
        t[0x90 + i] = (name, "23x")
        t[0xB0 + i] = (name + "/2addr", "12x")
    for i, name in enumerate(_LIT16):
        t[0xD0 + i] = (name, "22s")
    for i, name in enumerate(_LIT8):
        t[0xD8 + i] = (name, "22b")
    t[0xFA] = ("invoke-polymorphic", "45cc")
    t[0xFB] = ("invoke-polymorphic/range", "4rcc")
    t[0xFC] = ("invoke-custom", "35c")
    t[0xFD] = ("invoke-custom/range", "3rc")
    t[0xFE] = ("const-method-handle", "21c")
    t[0xFF] = ("const-method-type", "21c")
    return t


OPCODE_TABLE: list[tuple[str, str]] = _build_table()

MNEMONICS: frozenset[str] = frozenset(name for name, _ in OPCODE_TABLE if name != "unused")

INVOKE_OPCODES = frozenset(range(0x6E, 0x73)) | frozenset(range(0x74, 0x79))
GOTO_OPCODES = frozenset({0x28, 0x29, 0x2A})
IF_OPCODES = frozenset(range(0x32, 0x3E))
SWITCH_OPCODES = frozenset({0x2B, 0x2C})
RETURN_OPCODES = frozenset({0x0E, 0x0F, 0x10, 0x11})
THROW_OPCODE = 0x27
CONST_STRING_OPCODES = frozenset({0x1A, 0x1B})

# Payload pseudo-instruction idents (full first code unit).
PACKED_SWITCH_PAYLOAD = 0x0100
SPARSE_SWITCH_PAYLOAD = 0x0200
FILL_ARRAY_PAYLOAD = 0x0300

INVERSE_CONDITIONALS = {
    "if-eq": "if-ne", "if-ne": "if-eq",
    "if-lt": "if-ge", "if-ge": "if-lt",
    "if-gt": "if-le", "if-le": "if-gt",
    "if-eqz": "if-nez", "if-nez": "if-eqz",
    "if-ltz": "if-gez", "if-gez": "if-ltz",
    "if-gtz": "if-lez", "if-lez": "if-gtz",
}


def mnemonic(opcode: int) -> str:
    return OPCODE_TABLE[opcode][0]


def instruction_units(opcode: int) -> int:
    return FORMAT_UNITS[OPCODE_TABLE[opcode][1]]


def _signed16(v: int) -> int:
    return v - 0x10000 if v >= 0x8000 else v


def _signed8(v: int) -> int:
    return v - 0x100 if v >= 0x80 else v


def _signed32(lo: int, hi: int) -> int:
    v = lo | (hi << 16)
    return v - 0x100000000 if v >= 0x80000000 else v


def branch_offset(opcode: int, units: list[int]) -> int | None:
    """Relative branch target in code units, for goto/if instructions."""
    if opcode in GOTO_OPCODES:
        if opcode == 0x28:
            return _signed8(units[0] >> 8)
        if opcode == 0x29:
            return _signed16(units[1])
        return _signed32(units[1], units[2])
    if opcode in IF_OPCODES:
        return _signed16(units[1])
    return None


def payload_offset(units: list[int]) -> int:
    """Offset to a switch/fill-array payload (31t formats)."""
    return _signed32(units[1], units[2])


def invoke_method_index(opcode: int, units: list[int]) -> int | None:
    if opcode in INVOKE_OPCODES or opcode in (0xFA, 0xFB):
        return units[1]
    return None
