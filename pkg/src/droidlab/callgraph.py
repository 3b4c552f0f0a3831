"""Call graph and basic block extraction from parsed DEX code.

Blocks are maximal straight-line instruction runs: a run is closed by any
control transfer (branch, switch, return, throw) and at every branch target.
Edges carry the callee kind, decided by whether the callee's defining class
belongs to the app itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import dalvik
from .dex import CodeItem, DexFile
from .ir import CalleeKind, block_fingerprint


@dataclass
class MethodFacts:
    name: str
    block_opcodes: list[tuple[str, ...]]  # straight-line runs in code order
    invokes: dict[str, int] = field(default_factory=dict)  # callee name -> site count
    const_strings: set[str] = field(default_factory=set)


def split_blocks(code: CodeItem) -> list[tuple[str, ...]]:
    """Partition a method body into basic blocks, in code order."""
    instructions = code.instructions
    if not instructions:
        return []
    leaders: set[int] = {instructions[0].addr}
    addrs = {ins.addr for ins in instructions}
    for i, ins in enumerate(instructions):
        off = dalvik.branch_offset(ins.opcode, ins.units)
        if off is not None:
            target = ins.addr + off
            if target in addrs:
                leaders.add(target)
        if ins.opcode in dalvik.SWITCH_OPCODES:
            payload_addr = ins.addr + dalvik.payload_offset(ins.units)
            payload = code.payloads.get(payload_addr)
            if payload is not None:
                for rel in payload.targets:
                    target = ins.addr + rel
                    if target in addrs:
                        leaders.add(target)
        ends_block = (
            ins.opcode in dalvik.GOTO_OPCODES
            or ins.opcode in dalvik.IF_OPCODES
            or ins.opcode in dalvik.SWITCH_OPCODES
            or ins.opcode in dalvik.RETURN_OPCODES
            or ins.opcode == dalvik.THROW_OPCODE
        )
        if ends_block and i + 1 < len(instructions):
            leaders.add(instructions[i + 1].addr)

    blocks: list[tuple[str, ...]] = []
    current: list[str] = []
    for i, ins in enumerate(instructions):
        if ins.addr in leaders and current:
            blocks.append(tuple(current))
            current = []
        current.append(ins.mnemonic)
    if current:
        blocks.append(tuple(current))
    return blocks


def extract_method_facts(dex: DexFile) -> list[MethodFacts]:
    """Per defined method: blocks, invoke sites and referenced string constants."""
    facts: list[MethodFacts] = []
    for cd in dex.class_defs:
        for em in cd.methods:
            name = dex.method_name(em.method_idx)
            mf = MethodFacts(name=name, block_opcodes=[])
            if em.code is not None:
                mf.block_opcodes = split_blocks(em.code)
                for ins in em.code.instructions:
                    midx = dalvik.invoke_method_index(ins.opcode, ins.units)
                    if midx is not None:
                        callee = dex.method_name(midx)
                        mf.invokes[callee] = mf.invokes.get(callee, 0) + 1
                    if ins.opcode in dalvik.CONST_STRING_OPCODES:
                        sidx = ins.units[1] if ins.opcode == 0x1A else (
                            ins.units[1] | (ins.units[2] << 16)
                        )
                        mf.const_strings.add(dex.strings[sidx])
            facts.append(mf)
    return facts


def callee_kind(callee: str, defined_classes: set[str]) -> CalleeKind:
    cls = callee.split("->", 1)[0]
    return CalleeKind.USER if cls in defined_classes else CalleeKind.API


def build_call_graph(
    dex: DexFile, defined_classes: set[str] | None = None
) -> tuple[set[tuple[str, str, CalleeKind]], dict[str, int]]:
    """One edge per caller/callee pair plus the basic-block multiset.

    defined_classes widens the user/api decision beyond this single dex,
    which matters for multi-dex packages.
    """
    defined = defined_classes if defined_classes is not None else dex.defined_classes
    edges: set[tuple[str, str, CalleeKind]] = set()
    blocks: dict[str, int] = {}
    for mf in extract_method_facts(dex):
        for callee in mf.invokes:
            edges.add((mf.name, callee, callee_kind(callee, defined)))
        for run in mf.block_opcodes:
            fp = block_fingerprint(run)
            blocks[fp] = blocks.get(fp, 0) + 1
    return edges, blocks
