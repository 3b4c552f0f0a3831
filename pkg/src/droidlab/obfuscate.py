"""Evasion transforms applied at IR level: renaming, code-structure changes
and string encryption.

The transforms touch exactly what a detector can observe (names, opcode
streams, call edges, string constants) and never the labeling metadata.
Every output record still satisfies all IR invariants.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .dalvik import INVERSE_CONDITIONALS
from .ir import AppRecord, CalleeKind, ComponentKind, ObfuscationTag, derive_basic_blocks

REFLECTION_APIS = (
    "Ljava/lang/Class;->forName",
    "Ljava/lang/Class;->getMethod",
    "Ljava/lang/reflect/Method;->invoke",
)
CRYPTO_APIS = (
    "Ljavax/crypto/Cipher;->init",
    "Ljavax/crypto/spec/SecretKeySpec;-><init>",
    "Landroid/util/Base64;->decode",
)
_JUNK_OPS = ("nop", "goto")


@dataclass(frozen=True)
class ObfuscationPlan:
    seed: int
    transforms: frozenset[ObfuscationTag]
    indirection_fraction: float = 1.0
    junk_rate: float = 0.0
    reflection_fraction: float = 1.0
    string_encryption_fraction: float = 1.0

    def check(self) -> None:
        if not self.transforms:
            raise ValueError("obfuscation plan enables no transform")
        for name in ("indirection_fraction", "reflection_fraction", "string_encryption_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} out of [0,1]")
        if self.junk_rate < 0:
            raise ValueError(f"junk_rate {self.junk_rate} must be >= 0")


def _identifier(rng: np.random.Generator, length: int = 8) -> str:
    alphabet = "abcdefghijklmnopqrstuvwxyz"
    return "".join(alphabet[int(rng.integers(0, 26))] for _ in range(length))


def _split_method(name: str) -> tuple[str, str]:
    cls, _, meth = name.partition("->")
    return cls, meth


def _descriptor_to_dotted(cls: str) -> str:
    return cls.strip("L;").replace("/", ".")


def rename(app: AppRecord, seed: int) -> AppRecord:
    """Replace user-defined names with meaningless identifiers.

    API names are untouched; call edges are rewritten consistently so the
    graph shape is preserved.
    """
    rng = np.random.default_rng([seed, 0])
    class_map: dict[str, str] = {}
    method_map: dict[str, str] = {}
    for m in sorted(app.user_methods):
        cls, meth = _split_method(m)
        if cls not in class_map:
            class_map[cls] = f"L{_identifier(rng, 2)}/{_identifier(rng, 6)};"
        method_map[m] = f"{class_map[cls]}->{_identifier(rng, 6)}"

    def map_method(name: str) -> str:
        return method_map.get(name, name)

    components = frozenset(
        (kind, _identifier(rng, 10)) for kind, _name in sorted(app.app_components)
    )
    dotted_classes = {_descriptor_to_dotted(c) for c in class_map}
    new_strings = set()
    for s in sorted(app.strings):
        if s in dotted_classes or s in class_map:
            new_strings.add(_identifier(rng, 12))
        else:
            new_strings.add(s)

    edges = frozenset(
        (map_method(caller), map_method(callee), kind) for caller, callee, kind in app.call_edges
    )
    sequences = tuple((map_method(m), ops) for m, ops in app.opcode_sequences)
    return app.replace(
        user_methods=frozenset(method_map.values()),
        app_components=components,
        strings=frozenset(new_strings),
        call_edges=edges,
        opcode_sequences=sequences,
        obfuscation_tags=app.obfuscation_tags | {ObfuscationTag.RENAMING},
    )


def restructure(app: AppRecord, plan: ObfuscationPlan) -> AppRecord:
    """Call indirection, junk insertion, conditional inversion and reflection."""
    rng = np.random.default_rng([plan.seed, 1])
    api_edges = sorted(e for e in app.call_edges if e[2] == CalleeKind.API)
    other_edges = [e for e in app.call_edges if e[2] != CalleeKind.API]

    n_api = len(api_edges)
    n_reflect = round(plan.reflection_fraction * n_api)
    reflect_idx = set(rng.choice(n_api, size=n_reflect, replace=False).tolist()) if n_reflect else set()
    remaining = [i for i in range(n_api) if i not in reflect_idx]
    n_indirect = round(plan.indirection_fraction * len(remaining))
    indirect_idx = (
        set(np.array(remaining)[rng.choice(len(remaining), size=n_indirect, replace=False)].tolist())
        if n_indirect
        else set()
    )

    api_calls = dict(app.api_calls)
    user_methods = set(app.user_methods)
    sequences = [list(entry) for entry in app.opcode_sequences]
    new_edges: set[tuple[str, str, CalleeKind]] = set(other_edges)
    reflected_callers: set[str] = set()
    wrapper_count = 0

    for i, (caller, callee, _kind) in enumerate(api_edges):
        if i in reflect_idx:
            # Hide the direct call behind the reflection API.
            count = api_calls.pop(callee, 0)
            if count:
                for api in REFLECTION_APIS:
                    api_calls[api] = api_calls.get(api, 0) + count
            reflected_callers.add(caller)
        elif i in indirect_idx:
            wrapper = f"Lobf/Wrap{wrapper_count};->call{wrapper_count}"
            wrapper_count += 1
            user_methods.add(wrapper)
            new_edges.add((caller, wrapper, CalleeKind.USER))
            new_edges.add((wrapper, callee, CalleeKind.API))
            sequences.append((wrapper, ("invoke-static", "move-result-object", "return-object")))
        else:
            new_edges.add((caller, callee, CalleeKind.API))
    for caller in sorted(reflected_callers):
        for api in REFLECTION_APIS:
            new_edges.add((caller, api, CalleeKind.API))

    mutated: list[tuple[str, tuple[str, ...]]] = []
    for method, ops in sequences:
        out: list[str] = []
        for op in ops:
            if plan.junk_rate > 0 and rng.random() < plan.junk_rate:
                out.append(_JUNK_OPS[int(rng.integers(0, len(_JUNK_OPS)))])
            out.append(INVERSE_CONDITIONALS.get(op, op))
        mutated.append((method, tuple(out)))

    # Drop any api edge whose call count vanished through reflection.
    final_edges = frozenset(
        e for e in new_edges if e[2] != CalleeKind.API or e[1] in api_calls
    )
    return app.replace(
        api_calls=api_calls,
        user_methods=frozenset(user_methods),
        opcode_sequences=tuple(mutated),
        basic_blocks=derive_basic_blocks(mutated),
        call_edges=final_edges,
        obfuscation_tags=app.obfuscation_tags | {ObfuscationTag.CODE_STRUCTURE},
    )


def encrypt_strings(app: AppRecord, plan: ObfuscationPlan) -> AppRecord:
    """Replace string constants with ciphertext tokens plus decryptor scaffolding."""
    rng = np.random.default_rng([plan.seed, 2])
    ordered = sorted(app.strings)
    n_enc = round(plan.string_encryption_fraction * len(ordered))
    enc_idx = set(rng.choice(len(ordered), size=n_enc, replace=False).tolist()) if n_enc else set()

    new_strings = set()
    replaced = []
    for i, s in enumerate(ordered):
        if i in enc_idx:
            token = format(int(rng.integers(0, 2 ** 62)), "016x")
            new_strings.add(f"enc:{token}")
            replaced.append(s)
        else:
            new_strings.add(s)
    if not replaced:
        # Nothing to hide means no scaffolding either.
        return app

    api_calls = dict(app.api_calls)
    for api in CRYPTO_APIS:
        api_calls[api] = api_calls.get(api, 0) + len(replaced)

    decryptor = "Lobf/Vault;->reveal"
    user_methods = set(app.user_methods) | {decryptor}
    edges = set(app.call_edges)
    owners = sorted(app.user_methods)
    for s in replaced:
        if owners:
            digest = int(hashlib.sha256(s.encode("utf-8")).hexdigest()[:8], 16)
            edges.add((owners[digest % len(owners)], decryptor, CalleeKind.USER))
    for api in CRYPTO_APIS:
        edges.add((decryptor, api, CalleeKind.API))
    sequences = list(app.opcode_sequences)
    sequences.append((decryptor, ("const-string", "invoke-static", "move-result-object",
                                  "aget-byte", "xor-int/2addr", "int-to-byte", "return-object")))
    return app.replace(
        strings=frozenset(new_strings),
        api_calls=api_calls,
        user_methods=frozenset(user_methods),
        opcode_sequences=tuple(sequences),
        basic_blocks=derive_basic_blocks(sequences),
        call_edges=frozenset(edges),
        obfuscation_tags=app.obfuscation_tags | {ObfuscationTag.ENCRYPTION},
    )


def apply_plan(app: AppRecord, plan: ObfuscationPlan) -> AppRecord:
    """Apply the enabled transforms in a fixed order (rename, code, encrypt)."""
    plan.check()
    out = app
    if ObfuscationTag.RENAMING in plan.transforms:
        out = rename(out, plan.seed)
    if ObfuscationTag.CODE_STRUCTURE in plan.transforms:
        out = restructure(out, plan)
    if ObfuscationTag.ENCRYPTION in plan.transforms:
        out = encrypt_strings(out, plan)
    out.validate()
    return out
