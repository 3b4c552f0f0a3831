"""Synthetic app population generator.

Families carry prototype feature distributions, VTD distributions, activity
windows and duplicate-burst behavior; the generator draws per-month,
per-class populations from them.  Everything is seed-deterministic: each
(month, class) cell derives its own RNG, so generation order or parallelism
cannot change the output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .ir import (
    AppRecord,
    CalleeKind,
    ClassLabel,
    ComponentKind,
    Source,
    YearMonth,
    derive_basic_blocks,
)

_MUTATION_OPCODES = ("nop", "move", "const/4", "add-int", "xor-int/2addr", "neg-int")


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class FamilyProfile:
    family_id: str
    tendency: ClassLabel
    prototype: dict[str, dict[str, float]]  # category -> feature name -> inclusion prob
    vtd_dist: dict[int, float]
    birth: YearMonth
    death: YearMonth
    block_templates: tuple[tuple[str, ...], ...]
    burst_dist: dict[int, float] = field(default_factory=dict)  # group size >= 2 -> prob
    methods_range: tuple[int, int] = (2, 4)
    blocks_per_method: tuple[int, int] = (2, 5)

    def check(self) -> None:
        if self.birth.index() > self.death.index():
            raise GeneratorError(f"family {self.family_id}: birth after death")
        for cat, probs in self.prototype.items():
            for name, p in probs.items():
                if not 0.0 <= p <= 1.0:
                    raise GeneratorError(
                        f"family {self.family_id}: probability {p} for {cat}/{name} out of range"
                    )
        for v in self.vtd_dist:
            if v < 0:
                raise GeneratorError(f"family {self.family_id}: negative vtd {v} in support")
        for b in self.burst_dist:
            if b < 2:
                raise GeneratorError(f"family {self.family_id}: burst size {b} < 2")
        if not self.block_templates:
            raise GeneratorError(f"family {self.family_id}: no block templates")

    def active_in(self, month: YearMonth) -> bool:
        return self.birth.index() <= month.index() <= self.death.index()


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    start: YearMonth
    months: int
    quota: dict[ClassLabel, int]  # per-month, per-class record count
    families: tuple[FamilyProfile, ...]
    mutation_rate: float = 0.02
    duplicate_fraction: float = 0.0

    def check(self) -> None:
        if not self.families:
            raise GeneratorError("empty family roster")
        if self.months < 1:
            raise GeneratorError("months span must be >= 1")
        for cls, n in self.quota.items():
            if n <= 0:
                raise GeneratorError(f"quota for {cls.name.lower()} must be > 0")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise GeneratorError(f"mutation rate {self.mutation_rate} out of [0,1]")
        if not 0.0 <= self.duplicate_fraction <= 1.0:
            raise GeneratorError(f"duplicate fraction {self.duplicate_fraction} out of [0,1]")
        for fam in self.families:
            fam.check()
        for m in self.month_list():
            for cls in self.quota:
                if not any(f.tendency == cls and f.active_in(m) for f in self.families):
                    raise GeneratorError(
                        f"no active {cls.name.lower()} family in {m}"
                    )

    def month_list(self) -> list[YearMonth]:
        base = self.start.index()
        return [YearMonth.from_index(base + i) for i in range(self.months)]


def drift_schedule(config: GeneratorConfig) -> dict[ClassLabel, list[dict[str, float]]]:
    """Per-class, per-month family mixture; each row sums to 1."""
    config.check()
    table: dict[ClassLabel, list[dict[str, float]]] = {}
    for cls in sorted(config.quota, key=lambda c: c.value):
        rows: list[dict[str, float]] = []
        for m in config.month_list():
            active = [f for f in config.families if f.tendency == cls and f.active_in(m)]
            w = 1.0 / len(active)
            row = {f.family_id: 0.0 for f in config.families if f.tendency == cls}
            for f in active:
                row[f.family_id] = w
            rows.append(row)
        table[cls] = rows
    return table


def _draw_discrete(rng: np.random.Generator, dist: dict[int, float]) -> int:
    keys = sorted(dist)
    probs = np.array([dist[k] for k in keys], dtype=float)
    probs = probs / probs.sum()
    return int(keys[rng.choice(len(keys), p=probs)])


def _include(rng: np.random.Generator, p: float, mutation: float) -> bool:
    base = rng.random() < p
    flip = rng.random() < mutation
    return base != flip


def _synthesize(
    family: FamilyProfile,
    rng: np.random.Generator,
    month: YearMonth,
    record_id: str,
    mutation: float,
) -> AppRecord:
    proto = family.prototype

    def pick(category: str) -> list[str]:
        chosen = []
        for name in sorted(proto.get(category, {})):
            if _include(rng, proto[category][name], mutation):
                chosen.append(name)
        return chosen

    permissions = pick("permission")
    intents = pick("intent")
    hw = pick("hw-feature")
    strings = pick("string")
    components = []
    for entry in pick("component"):
        kind, _, name = entry.partition(":")
        components.append((ComponentKind(kind), name))
    apis = {name: 1 + int(rng.integers(0, 3)) for name in pick("api-call")}

    cls_token = format(int(rng.integers(0, 16 ** 6)), "06x")
    class_name = f"Lapp/{family.family_id}/C{cls_token};"
    n_methods = int(rng.integers(family.methods_range[0], family.methods_range[1] + 1))
    methods = [f"{class_name}->run{i}" for i in range(n_methods)]

    sequences: list[tuple[str, tuple[str, ...]]] = []
    templates = family.block_templates
    for m in methods:
        n_blocks = int(rng.integers(family.blocks_per_method[0], family.blocks_per_method[1] + 1))
        for _ in range(n_blocks):
            t = list(templates[int(rng.integers(0, len(templates)))])
            if rng.random() < mutation:
                t[int(rng.integers(0, len(t)))] = _MUTATION_OPCODES[
                    int(rng.integers(0, len(_MUTATION_OPCODES)))
                ]
            sequences.append((m, tuple(t)))

    edges: set[tuple[str, str, CalleeKind]] = set()
    for api in sorted(apis):
        caller = methods[int(rng.integers(0, len(methods)))]
        edges.add((caller, api, CalleeKind.API))
    for i in range(1, len(methods)):
        edges.add((methods[i - 1], methods[i], CalleeKind.USER))

    record = AppRecord(
        id=record_id,
        timestamp=month,
        source=Source.SYNTHETIC,
        vtd=_draw_discrete(rng, family.vtd_dist),
        permissions=frozenset(permissions),
        app_components=frozenset(components),
        intent_actions=frozenset(intents),
        hw_sw_features=frozenset(hw),
        strings=frozenset(strings),
        api_calls=apis,
        user_methods=frozenset(methods),
        opcode_sequences=tuple(sequences),
        basic_blocks=derive_basic_blocks(sequences),
        call_edges=frozenset(edges),
        family_id=family.family_id,
    )
    return record


def generate(config: GeneratorConfig) -> list[AppRecord]:
    """Draw the configured population; deterministic for a given seed."""
    config.check()
    mixture = drift_schedule(config)
    by_id = {f.family_id: f for f in config.families}
    records: list[AppRecord] = []

    for mi, month in enumerate(config.month_list()):
        for cls in sorted(config.quota, key=lambda c: c.value):
            rng = np.random.default_rng([config.seed, mi, cls.value])
            row = mixture[cls][mi]
            active = [f for f in sorted(row) if row[f] > 0]
            weights = np.array([row[f] for f in active])
            burstable = [f for f in active if by_id[f].burst_dist]

            n = config.quota[cls]
            dup_quota = round(n * config.duplicate_fraction)
            counter = 0

            def next_id() -> str:
                nonlocal counter
                rid = f"syn-{month}-{cls.letter.lower()}{counter:05d}"
                counter += 1
                return rid

            # Duplicate bursts: exact copies of a fresh base record.
            produced = 0
            while burstable and produced < dup_quota:
                bw = np.array([row[f] for f in burstable])
                fam = by_id[burstable[int(rng.choice(len(burstable), p=bw / bw.sum()))]]
                size = _draw_discrete(rng, fam.burst_dist)
                if produced + size > dup_quota or produced + size > n:
                    break
                base = _synthesize(fam, rng, month, next_id(), config.mutation_rate)
                records.append(base)
                for _ in range(size - 1):
                    records.append(base.replace(id=next_id()))
                produced += size

            while counter < n:
                fam = by_id[active[int(rng.choice(len(active), p=weights / weights.sum()))]]
                records.append(_synthesize(fam, rng, month, next_id(), config.mutation_rate))

    return records


# --- structured-text config round trip ----------------------------------

def family_to_dict(f: FamilyProfile) -> dict:
    return {
        "family_id": f.family_id,
        "tendency": f.tendency.name.lower(),
        "prototype": {c: dict(sorted(v.items())) for c, v in sorted(f.prototype.items())},
        "vtd_dist": {str(k): v for k, v in sorted(f.vtd_dist.items())},
        "birth": str(f.birth),
        "death": str(f.death),
        "block_templates": [list(t) for t in f.block_templates],
        "burst_dist": {str(k): v for k, v in sorted(f.burst_dist.items())},
        "methods_range": list(f.methods_range),
        "blocks_per_method": list(f.blocks_per_method),
    }


def family_from_dict(d: dict) -> FamilyProfile:
    return FamilyProfile(
        family_id=d["family_id"],
        tendency=ClassLabel[d["tendency"].upper()],
        prototype={c: dict(v) for c, v in d["prototype"].items()},
        vtd_dist={int(k): float(v) for k, v in d["vtd_dist"].items()},
        birth=YearMonth.parse(d["birth"]),
        death=YearMonth.parse(d["death"]),
        block_templates=tuple(tuple(t) for t in d["block_templates"]),
        burst_dist={int(k): float(v) for k, v in d.get("burst_dist", {}).items()},
        methods_range=tuple(d.get("methods_range", (2, 4))),
        blocks_per_method=tuple(d.get("blocks_per_method", (2, 5))),
    )


def config_to_dict(c: GeneratorConfig) -> dict:
    return {
        "seed": c.seed,
        "start": str(c.start),
        "months": c.months,
        "quota": {cls.name.lower(): n for cls, n in sorted(c.quota.items())},
        "families": [family_to_dict(f) for f in c.families],
        "mutation_rate": c.mutation_rate,
        "duplicate_fraction": c.duplicate_fraction,
    }


def config_from_dict(d: dict) -> GeneratorConfig:
    return GeneratorConfig(
        seed=int(d["seed"]),
        start=YearMonth.parse(d["start"]),
        months=int(d["months"]),
        quota={ClassLabel[k.upper()]: int(v) for k, v in d["quota"].items()},
        families=tuple(family_from_dict(f) for f in d["families"]),
        mutation_rate=float(d.get("mutation_rate", 0.02)),
        duplicate_fraction=float(d.get("duplicate_fraction", 0.0)),
    )


def save_config(config: GeneratorConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path) -> GeneratorConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
