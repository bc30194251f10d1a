"""Claim verification against the trusted graph: SUPPORTED when the statement
is derivable, CONTRADICTED when asserting it creates a conflict (functional
clash, disjointness, or a stored explicit negation), NOT_FOUND otherwise.

Open-world: absence alone never contradicts. Claim conditions are assumed
hypothetically on a copy; the trusted graph is never touched.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

from .namespaces import (
    RDF_OBJECT,
    RDF_PREDICATE,
    RDF_STATEMENT,
    RDF_SUBJECT,
    RDF_TYPE,
    SYS_NOT,
    SYS_NS,
    XSD_BOOLEAN,
)
from .rdf_core import (
    Graph,
    Iri,
    Literal,
    Origin,
    Provenance,
    StructuralError,
    Triple,
    parse_term_text,
    triple_text,
)
from .reasoner import Conflict, check_consistency, materialize


class ClaimInputError(ValueError):
    pass


class ConditionInconsistencyError(RuntimeError):
    """Claim conditions clash with the trusted graph; distinct from CONTRADICTED."""

    def __init__(self, conflicts: list[Conflict]):
        self.conflicts = conflicts
        super().__init__(f"claim conditions are inconsistent with the trusted graph "
                         f"({len(conflicts)} conflict(s))")


class Polarity(Enum):
    ASSERTED = "ASSERTED"
    NEGATED = "NEGATED"


class VerdictStatus(Enum):
    SUPPORTED = "SUPPORTED"
    CONTRADICTED = "CONTRADICTED"
    NOT_FOUND = "NOT_FOUND"


class OverallStatus(Enum):
    SUPPORTED = "SUPPORTED"
    CONTRADICTED = "CONTRADICTED"
    MIXED = "MIXED"
    NOT_FOUND = "NOT_FOUND"


class TraceKind(Enum):
    MATCHED_FACT = "MATCHED_FACT"
    INFERENCE_RULE = "INFERENCE_RULE"
    CONDITION_CHECK = "CONDITION_CHECK"
    CONFLICT = "CONFLICT"


@dataclass(frozen=True)
class Claim:
    statement: Triple
    polarity: Polarity = Polarity.ASSERTED
    conditions: tuple[Triple, ...] = ()
    source_text: str | None = None

    def to_json(self) -> dict:
        return {
            "statement": triple_text(self.statement),
            "polarity": self.polarity.value,
            "conditions": [triple_text(t) for t in self.conditions],
            "source_text": self.source_text,
        }


@dataclass(frozen=True)
class TraceStep:
    kind: TraceKind
    triples: tuple[Triple, ...]
    rule_id: str | None = None
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "triples": [triple_text(t) for t in self.triples],
            "rule_id": self.rule_id,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    trace: tuple[TraceStep, ...]
    claim: Claim

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "trace": [s.to_json() for s in self.trace],
            "claim": self.claim.to_json(),
        }


def statement_id(statement: Triple) -> Iri:
    """Deterministic statement-identifier node for the negation overlay."""
    digest = hashlib.sha256(triple_text(statement).encode("utf-8")).hexdigest()[:16]
    return Iri(f"{SYS_NS}stmt-{digest}")


def negation_overlay(statement: Triple) -> list[Triple]:
    """Reified explicit negation: (stmt-id, sys:not, true) over the statement."""
    stmt = statement_id(statement)
    return [
        Triple(stmt, Iri(RDF_TYPE), Iri(RDF_STATEMENT)),
        Triple(stmt, Iri(RDF_SUBJECT), statement.subject),
        Triple(stmt, Iri(RDF_PREDICATE), statement.predicate),
        Triple(stmt, Iri(RDF_OBJECT), statement.object),
        Triple(stmt, Iri(SYS_NOT), Literal("true", XSD_BOOLEAN)),
    ]


_HYPOTHESIS_PROV = Provenance(source_id="hypothesis", origin=Origin.TOOL_RESULT)


def check_claim(claim: Claim, trusted: Graph) -> Verdict:
    """Evaluate one claim over materialize(trusted + conditions)."""
    hypothetical = trusted.copy()
    for condition in claim.conditions:
        hypothetical.insert(condition, _HYPOTHESIS_PROV)
    m, derivations = materialize(hypothetical, want_derivations=True)
    base_conflicts = check_consistency(m)
    if base_conflicts:
        raise ConditionInconsistencyError(base_conflicts)

    condition_steps = tuple(
        TraceStep(TraceKind.CONDITION_CHECK, (c,), detail="condition assumed hypothetically")
        for c in claim.conditions
    )

    asserted = _check_asserted(claim.statement, m, derivations, condition_steps)
    if claim.polarity is Polarity.NEGATED:
        asserted = _swap(asserted)
    return Verdict(asserted[0], asserted[1], claim)


def _check_asserted(statement: Triple, m: Graph, derivations, condition_steps):
    if statement in m:
        trace = condition_steps + _support_trace(statement, m, derivations)
        return (VerdictStatus.SUPPORTED, trace)

    with_claim = m.copy()
    with_claim.insert(statement, _HYPOTHESIS_PROV)
    rematerialized = materialize(with_claim)
    conflicts = check_consistency(rematerialized)
    if conflicts:
        steps = condition_steps + tuple(
            TraceStep(TraceKind.CONFLICT, c.detail, detail=c.kind.value) for c in conflicts
        )
        return (VerdictStatus.CONTRADICTED, steps)

    lookup = TraceStep(TraceKind.MATCHED_FACT, (statement,),
                       detail="lookup attempted: no match in materialized graph")
    return (VerdictStatus.NOT_FOUND, condition_steps + (lookup,))


def _support_trace(statement: Triple, m: Graph, derivations) -> tuple[TraceStep, ...]:
    """Derivation chain bottom-up: matched leaves first, then rule firings."""
    steps: list[TraceStep] = []
    seen: set[Triple] = set()

    def walk(t: Triple) -> None:
        if t in seen:
            return
        seen.add(t)
        derivation = derivations.get(t)
        if derivation is None:
            steps.append(TraceStep(TraceKind.MATCHED_FACT, (t,)))
            return
        for premise in derivation.premises:
            walk(premise)
        steps.append(TraceStep(TraceKind.INFERENCE_RULE, derivation.premises + (t,),
                               rule_id=derivation.rule_id.value))

    walk(statement)
    return tuple(steps)


def _swap(result):
    status, trace = result
    if status is VerdictStatus.SUPPORTED:
        return (VerdictStatus.CONTRADICTED, trace)
    if status is VerdictStatus.CONTRADICTED:
        return (VerdictStatus.SUPPORTED, trace)
    return result


def check_answer(claims: list[Claim], trusted: Graph) -> tuple[OverallStatus, list[Verdict]]:
    """Strict aggregation: any contradiction sinks the answer."""
    if not claims:
        raise ClaimInputError("at least one claim is required")
    verdicts = [check_claim(c, trusted) for c in claims]
    statuses = {v.status for v in verdicts}
    if VerdictStatus.CONTRADICTED in statuses:
        overall = OverallStatus.CONTRADICTED
    elif statuses == {VerdictStatus.SUPPORTED}:
        overall = OverallStatus.SUPPORTED
    elif statuses == {VerdictStatus.NOT_FOUND}:
        overall = OverallStatus.NOT_FOUND
    else:
        overall = OverallStatus.MIXED
    return overall, verdicts


# ---------------------------------------------------------------------------
# Structured claim intake (JSON Lines)
# ---------------------------------------------------------------------------


@dataclass
class ClaimParse:
    claims: list[Claim] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def parse_claims(text: str) -> ClaimParse:
    """Best-effort JSONL intake: bad lines produce diagnostics, not failure."""
    result = ClaimParse()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            result.diagnostics.append(f"line {lineno}: invalid JSON: {e.msg}")
            continue
        try:
            result.claims.append(_claim_from_json(obj))
        except (ClaimInputError, StructuralError, KeyError, TypeError, ValueError) as e:
            result.diagnostics.append(f"line {lineno}: {e}")
    return result


def _claim_from_json(obj: dict) -> Claim:
    statement = _triple_from_json(obj)
    polarity = Polarity(obj.get("polarity", "ASSERTED"))
    conditions = tuple(_triple_from_json(c) for c in obj.get("conditions", ()))
    return Claim(statement, polarity, conditions, obj.get("source_text"))


def _triple_from_json(obj: dict) -> Triple:
    return Triple(
        parse_term_text(obj["subject"]),
        parse_term_text(obj["predicate"]),
        parse_term_text(obj["object"]),
    )
