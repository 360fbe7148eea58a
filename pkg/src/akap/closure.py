"""Bounded attacker-knowledge closure for the XOR/hash term algebra.

Starting from a finite set of observed byte-string terms, the engine
saturates under two rules, level by level up to a depth bound:

  R1: the XOR of any two known 32-byte terms,
  R2: the hash of any ordered tuple of known terms up to a maximum arity.

Term counts explode with arity, so saturation carries a budget (maximum
resident terms). The engine is organized so the budget degrades claims
honestly rather than silently:

  * The "core" tier (initial Blocks and XORs of core terms) is saturated
    exactly through the requested depth, before any hashing. It is small
    by construction. If even that exceeds the budget, core_complete goes
    False and no bounded verdict should be trusted.
  * Hash applications and XORs touching hash outputs are enumerated in a
    fixed deterministic order until the budget is hit, at which point
    complete goes False (a partial closure, flagged, never silent).

Every derived term records the rule and parents that produced it, so any
membership claim can be replayed step by step.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Union

from .blocks import BLOCK_SIZE, DEFAULT_HASH, encode_part, h, xor
from .errors import ConfigError

DEFAULT_BUDGET = 20_000
MAX_DEPTH = 3

TermInput = Union[bytes, str, int]


@dataclass
class TermRecord:
    value: bytes
    provenance: str              # transcript | leak | card-dump | initial | derived
    rule: str | None             # None for initial terms, else "xor" | "hash"
    parents: tuple[bytes, ...]
    depth: int
    core: bool                   # member of the exactly-saturated XOR tier


class KnowledgeSet:
    def __init__(self, budget: int = DEFAULT_BUDGET):
        if budget < 1:
            raise ConfigError(f"term budget must be >= 1, got {budget}")
        self.budget = budget
        self.complete = True        # every rule application enumerated to depth
        self.core_complete = True   # the XOR tier saturated exactly to depth
        self._terms: dict[bytes, TermRecord] = {}

    def __contains__(self, value: bytes) -> bool:
        return bytes(value) in self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def values(self) -> list[bytes]:
        return list(self._terms)

    def record(self, value: bytes) -> TermRecord:
        return self._terms[bytes(value)]

    def add_initial(self, value: TermInput, provenance: str = "initial") -> bytes:
        encoded = encode_part(value)
        if encoded not in self._terms:
            if len(self._terms) >= self.budget:
                raise ConfigError("term budget smaller than the initial set")
            self._terms[encoded] = TermRecord(
                value=encoded,
                provenance=provenance,
                rule=None,
                parents=(),
                depth=0,
                core=len(encoded) == BLOCK_SIZE,
            )
        return encoded

    def _add_derived(
        self, value: bytes, rule: str, parents: tuple[bytes, ...], depth: int, core: bool
    ) -> bool:
        """Record a derivation. Returns False when the budget refuses it."""
        if value in self._terms:
            return True              # first derivation wins
        if len(self._terms) >= self.budget:
            return False
        self._terms[value] = TermRecord(
            value=value, provenance="derived", rule=rule, parents=parents, depth=depth, core=core
        )
        return True

    def trace(self, value: bytes) -> list[dict]:
        """Derivation steps for value, parents before children, hex-encoded."""
        value = bytes(value)
        if value not in self._terms:
            raise KeyError(f"term not in knowledge set: {value.hex()}")
        steps: list[dict] = []
        emitted: set[bytes] = set()

        def visit(v: bytes) -> None:
            record = self._terms[v]
            if record.rule is None or v in emitted:
                return
            emitted.add(v)
            for parent in record.parents:
                visit(parent)
            steps.append(
                {
                    "rule": record.rule,
                    "parents": [p.hex() for p in record.parents],
                    "result": v.hex(),
                }
            )

        visit(value)
        return steps


def initial_knowledge(
    values: Iterable[TermInput],
    provenance: str = "initial",
    budget: int = DEFAULT_BUDGET,
) -> KnowledgeSet:
    ks = KnowledgeSet(budget=budget)
    for value in values:
        ks.add_initial(value, provenance)
    return ks


def _check_bounds(depth: int, max_arity: int) -> None:
    if not 0 <= depth <= MAX_DEPTH:
        raise ConfigError(f"closure depth must be between 0 and {MAX_DEPTH}, got {depth}")
    if max_arity < 1:
        raise ConfigError(f"max arity must be >= 1, got {max_arity}")


def closure(
    initial: KnowledgeSet | Iterable[TermInput],
    depth: int,
    max_arity: int = 5,
    budget: int | None = None,
    alg: str = DEFAULT_HASH,
    target: bytes | None = None,
) -> KnowledgeSet:
    """Saturate the initial knowledge under R1/R2 to the given depth.

    When target is given, saturation stops early as soon as it appears
    (the result still contains everything enumerated up to that point).
    """
    _check_bounds(depth, max_arity)
    if isinstance(initial, KnowledgeSet):
        ks = initial
        if budget is not None and budget != ks.budget:
            raise ConfigError("budget is fixed when passing a KnowledgeSet")
    else:
        ks = initial_knowledge(initial, budget=DEFAULT_BUDGET if budget is None else budget)
    target = None if target is None else bytes(target)
    if target is not None and target in ks:
        return ks

    found = False

    def add(value, rule, parents, level, core) -> str:
        nonlocal found
        if not ks._add_derived(value, rule, parents, level, core):
            return "budget"
        if target is not None and value == target:
            found = True
            return "found"
        return "ok"

    # Pass 1: exact XOR saturation of the core tier, level by level.
    for level in range(1, depth + 1):
        snapshot = [v for v, r in ks._terms.items() if r.core and r.depth < level]
        grew = False
        for i, a in enumerate(snapshot):
            for b in snapshot[i:]:
                outcome = add(xor(a, b), "xor", (a, b), level, core=True)
                if outcome == "budget":
                    ks.complete = False
                    ks.core_complete = False
                    return ks
                if outcome == "found":
                    return ks
                grew = grew or ks._terms[xor(a, b)].depth == level
        if not grew:
            break

    # Pass 2: budgeted enumeration of hash applications and fringe XORs.
    for level in range(1, depth + 1):
        snapshot = [v for v, r in ks._terms.items() if r.depth < level]
        blocks = [v for v in snapshot if len(v) == BLOCK_SIZE]
        fringe = {v for v in blocks if not ks._terms[v].core}
        before = len(ks)
        for i, a in enumerate(blocks):
            for b in blocks[i:]:
                if a not in fringe and b not in fringe:
                    continue                 # core pairs were handled exactly
                outcome = add(xor(a, b), "xor", (a, b), level, core=False)
                if outcome == "budget":
                    ks.complete = False
                    return ks
                if outcome == "found":
                    return ks
        for arity in range(1, max_arity + 1):
            for combo in product(snapshot, repeat=arity):
                outcome = add(h(*combo, alg=alg), "hash", combo, level, core=False)
                if outcome == "budget":
                    ks.complete = False
                    return ks
                if outcome == "found":
                    return ks
        if len(ks) == before:
            next_snapshot = sum(1 for r in ks._terms.values() if r.depth < level + 1)
            if next_snapshot == len(snapshot):
                break
    return ks


@dataclass
class DerivabilityResult:
    found: bool
    trace: list[dict] | None
    knowledge: KnowledgeSet

    @property
    def complete(self) -> bool:
        return self.knowledge.complete

    @property
    def core_complete(self) -> bool:
        return self.knowledge.core_complete


def derivable(
    initial: KnowledgeSet | Iterable[TermInput],
    target: bytes,
    depth: int,
    max_arity: int = 5,
    budget: int | None = None,
    alg: str = DEFAULT_HASH,
) -> DerivabilityResult:
    """Decide target membership in the bounded closure; trace when found."""
    ks = closure(initial, depth, max_arity=max_arity, budget=budget, alg=alg, target=target)
    if bytes(target) in ks:
        return DerivabilityResult(True, ks.trace(bytes(target)), ks)
    return DerivabilityResult(False, None, ks)


def replay_trace(knowledge: KnowledgeSet, value: bytes, alg: str = DEFAULT_HASH) -> bytes:
    """Recompute value from its recorded derivation (soundness check)."""
    record = knowledge.record(value)
    if record.rule is None:
        return record.value
    parents = [replay_trace(knowledge, p, alg) for p in record.parents]
    if record.rule == "xor":
        return xor(parents[0], parents[1])
    if record.rule == "hash":
        return bytes(h(*parents, alg=alg))
    raise ConfigError(f"unknown rule in trace: {record.rule}")
