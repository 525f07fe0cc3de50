"""Constraint extraction and scoring: boolean checks, overlap metrics, reports.

Every boolean check normalizes BOTH sides (lowercase, punctuation split into
standalone tokens), deliberately forgiving tokenization-space mismatches like
"song," versus "song ,".
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .model import ComponentKind, TaskInstance
from .textutil import length_class, normalize, normalize_tokens, tokenize


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeginsWith:
    phrase: str


@dataclass(frozen=True)
class EndsWith:
    phrase: str


@dataclass(frozen=True)
class ContainsKeywords:
    keywords: Tuple[str, ...]


@dataclass(frozen=True)
class LengthClass:
    label: str


@dataclass(frozen=True)
class ExactMatch:
    """Label-valued targets (state/evidence/action tasks) score as exact match."""

    value: str


@dataclass(frozen=True)
class ReferenceOverlap:
    """Free-text targets score as overlap against the gold reference."""

    reference: str


Constraint = Union[BeginsWith, EndsWith, ContainsKeywords, LengthClass, ExactMatch, ReferenceOverlap]

_CONSTRAINT_TYPES = {
    "begins_with": BeginsWith,
    "ends_with": EndsWith,
    "contains_keywords": ContainsKeywords,
    "length_class": LengthClass,
    "exact_match": ExactMatch,
    "reference_overlap": ReferenceOverlap,
}

_TYPE_NAMES = {cls: name for name, cls in _CONSTRAINT_TYPES.items()}


def constraint_to_dict(constraint: Constraint) -> Dict[str, Any]:
    name = _TYPE_NAMES[type(constraint)]
    if isinstance(constraint, (BeginsWith, EndsWith)):
        return {"type": name, "phrase": constraint.phrase}
    if isinstance(constraint, ContainsKeywords):
        return {"type": name, "keywords": list(constraint.keywords)}
    if isinstance(constraint, LengthClass):
        return {"type": name, "label": constraint.label}
    if isinstance(constraint, ExactMatch):
        return {"type": name, "value": constraint.value}
    return {"type": name, "reference": constraint.reference}


def constraint_from_dict(data: Dict[str, Any]) -> Constraint:
    kind = data["type"]
    if kind not in _CONSTRAINT_TYPES:
        raise ValueError(f"unknown constraint type: {kind!r}")
    if kind == "begins_with":
        return BeginsWith(str(data["phrase"]))
    if kind == "ends_with":
        return EndsWith(str(data["phrase"]))
    if kind == "contains_keywords":
        return ContainsKeywords(tuple(str(k) for k in data["keywords"]))
    if kind == "length_class":
        return LengthClass(str(data["label"]))
    if kind == "exact_match":
        return ExactMatch(str(data["value"]))
    return ReferenceOverlap(str(data["reference"]))


@dataclass(frozen=True)
class ConstraintSpec:
    """The machine-checkable constraints one task instance puts on an output.

    Held as a frozenset so unions and equality are order-free: a composite
    instance's spec equals the union of its parents' specs.
    """

    constraints: FrozenSet[Constraint]

    def to_dicts(self) -> List[Dict[str, Any]]:
        return sorted(
            (constraint_to_dict(c) for c in self.constraints),
            key=lambda d: sorted(d.items()),
        )

    @classmethod
    def from_dicts(cls, data: Iterable[Dict[str, Any]]) -> "ConstraintSpec":
        return cls(frozenset(constraint_from_dict(d) for d in data))

    def union(self, other: "ConstraintSpec") -> "ConstraintSpec":
        return ConstraintSpec(self.constraints | other.constraints)


def split_keyword_list(value: str) -> Tuple[str, ...]:
    """Parse the comma-joined storage form of a keyword list."""
    return tuple(k.strip() for k in value.split(",") if k.strip())


def extract_constraints(inst: TaskInstance) -> ConstraintSpec:
    """Deterministically derive the constraint set for an instance.

    Grounding items with checkable semantics contribute boolean constraints;
    response-target instances always carry a ReferenceOverlap on the gold
    response, and label-target instances an ExactMatch on the gold label.
    """
    constraints: set = set()
    for item in inst.grounding_items:
        if item.kind == "begins_with":
            constraints.add(BeginsWith(item.value))
        elif item.kind == "ends_with":
            constraints.add(EndsWith(item.value))
        elif item.kind == "keywords":
            constraints.add(ContainsKeywords(split_keyword_list(item.value)))
        elif item.kind == "length_class":
            constraints.add(LengthClass(item.value))
    if inst.signature.target == ComponentKind.RESPONSE:
        constraints.add(ReferenceOverlap(inst.target_item.value))
    else:
        constraints.add(ExactMatch(inst.target_item.value))
    return ConstraintSpec(frozenset(constraints))


# ---------------------------------------------------------------------------
# Boolean checks
# ---------------------------------------------------------------------------

def check_begins_with(output: str, phrase: str) -> bool:
    out = normalize_tokens(output)
    pre = normalize_tokens(phrase)
    return out[: len(pre)] == pre


def check_ends_with(output: str, phrase: str) -> bool:
    out = normalize_tokens(output)
    suf = normalize_tokens(phrase)
    if not suf:
        return True
    return out[-len(suf):] == suf


def _contains_sequence(haystack: List[str], needle: List[str]) -> bool:
    if not needle:
        return True
    n = len(needle)
    return any(haystack[i : i + n] == needle for i in range(len(haystack) - n + 1))


def check_keywords(output: str, keywords: Sequence[str]) -> bool:
    """True iff every keyword occurs as a token (or contiguous token run)."""
    out = normalize_tokens(output)
    return all(_contains_sequence(out, normalize_tokens(k)) for k in keywords)


def check_length_class(output: str, label: str) -> bool:
    return length_class(len(tokenize(output))) == label


def check_exact_match(output: str, value: str) -> bool:
    return normalize(output) == normalize(value)


def check_constraint(constraint: Constraint, output: str) -> Optional[bool]:
    """Boolean verdict for boolean constraints; None for overlap constraints."""
    if isinstance(constraint, BeginsWith):
        return check_begins_with(output, constraint.phrase)
    if isinstance(constraint, EndsWith):
        return check_ends_with(output, constraint.phrase)
    if isinstance(constraint, ContainsKeywords):
        return check_keywords(output, constraint.keywords)
    if isinstance(constraint, LengthClass):
        return check_length_class(output, constraint.label)
    if isinstance(constraint, ExactMatch):
        return check_exact_match(output, constraint.value)
    return None


# ---------------------------------------------------------------------------
# Overlap metrics
# ---------------------------------------------------------------------------

def _ngram_counts(tokens: List[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _bleu2_counts(candidate: str, references: Sequence[str]) -> Tuple[int, int, int, int, int, int]:
    """Clipped n-gram match/total counts plus candidate/effective-reference lengths."""
    cand = normalize_tokens(candidate)
    refs = [normalize_tokens(r) for r in references]
    if not refs:
        raise ValueError("bleu2 needs at least one reference")
    counts = []
    for n in (1, 2):
        cand_ngrams = _ngram_counts(cand, n)
        max_ref: Counter = Counter()
        for ref in refs:
            for gram, count in _ngram_counts(ref, n).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        matched = sum(min(count, max_ref[gram]) for gram, count in cand_ngrams.items())
        total = sum(cand_ngrams.values())
        counts.extend([matched, total])
    cand_len = len(cand)
    # Effective reference length: the closest to the candidate, shorter on ties.
    ref_len = min((abs(len(r) - cand_len), len(r)) for r in refs)[1]
    return counts[0], counts[1], counts[2], counts[3], cand_len, ref_len


def _bleu2_from_counts(m1: int, t1: int, m2: int, t2: int, cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    precisions = []
    for matched, total in ((m1, t1), (m2, t2)):
        if total == 0:
            precisions.append(1.0)
        elif matched == 0:
            # Add-one smoothing so zero matches floor above zero.
            precisions.append(1.0 / (total + 1))
        else:
            precisions.append(matched / total)
    brevity = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.sqrt(precisions[0] * precisions[1])


def bleu2(candidate: str, references: Sequence[str]) -> float:
    """BLEU-2: geometric mean of clipped unigram/bigram precision times brevity penalty."""
    return _bleu2_from_counts(*_bleu2_counts(candidate, references))


def corpus_bleu2(pairs: Sequence[Tuple[str, Sequence[str]]]) -> float:
    """Corpus-level BLEU-2: counts are pooled across pairs before combining."""
    totals = [0, 0, 0, 0, 0, 0]
    for candidate, references in pairs:
        for i, value in enumerate(_bleu2_counts(candidate, references)):
            totals[i] += value
    return _bleu2_from_counts(*totals)


def _lcs_length(a: List[str], b: List[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[-1]))
        prev = current
    return prev[-1]


def rouge_l(candidate: str, reference: str, beta: float = 1.0) -> float:
    """Rouge-L F-score: (1 + b^2) * lcs / (len(candidate) + b^2 * len(reference)).

    The closed form avoids intermediate precision/recall rounding, so e.g.
    candidate "a b c" against reference "a c" is exactly 0.8 at beta=1.
    """
    cand = normalize_tokens(candidate)
    ref = normalize_tokens(reference)
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    return (1.0 + beta * beta) * lcs / (len(cand) + beta * beta * len(ref))


# ---------------------------------------------------------------------------
# Corpus scoring
# ---------------------------------------------------------------------------

BOOLEAN_KINDS = ("begins_with", "ends_with", "contains_keywords", "length_class", "exact_match")


@dataclass(frozen=True)
class MetricReport:
    """Per-constraint and aggregate scores for a scored corpus.

    per_constraint_accuracy counts an example as passing a constraint kind
    when every constraint of that kind it carries holds; examples without the
    kind pass vacuously. That makes the conjunction bound a theorem:
    compositional_accuracy <= min(per-constraint accuracies).
    """

    n_examples: int
    per_constraint_accuracy: Dict[str, float]
    constraint_counts: Dict[str, int]
    compositional_accuracy: float
    bleu2: Optional[float]
    rouge_l: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_examples": self.n_examples,
            "per_constraint_accuracy": dict(sorted(self.per_constraint_accuracy.items())),
            "constraint_counts": dict(sorted(self.constraint_counts.items())),
            "compositional_accuracy": self.compositional_accuracy,
            "bleu2": self.bleu2,
            "rouge_l": self.rouge_l,
        }


def score_corpus(examples: Sequence[Tuple[ConstraintSpec, str]]) -> MetricReport:
    """Score model outputs against their constraint specs.

    Boolean constraints produce per-kind accuracies plus the conjunctive
    compositional accuracy; ReferenceOverlap constraints produce corpus
    BLEU-2 and mean Rouge-L.
    """
    n = len(examples)
    kind_pass: Dict[str, int] = {}
    kind_present: Dict[str, int] = {}
    all_pass = 0
    overlap_pairs: List[Tuple[str, Sequence[str]]] = []
    rouge_scores: List[float] = []

    for spec, output in examples:
        example_ok = True
        present_kinds = set()
        failed_kinds = set()
        for constraint in spec.constraints:
            verdict = check_constraint(constraint, output)
            if verdict is None:
                reference = constraint.reference  # type: ignore[union-attr]
                overlap_pairs.append((output, [reference]))
                rouge_scores.append(rouge_l(output, reference))
                continue
            kind = _TYPE_NAMES[type(constraint)]
            present_kinds.add(kind)
            if not verdict:
                failed_kinds.add(kind)
                example_ok = False
        for kind in present_kinds:
            kind_present[kind] = kind_present.get(kind, 0) + 1
        for kind in BOOLEAN_KINDS:
            if kind not in failed_kinds:
                kind_pass[kind] = kind_pass.get(kind, 0) + 1
        if example_ok:
            all_pass += 1

    per_kind = {
        kind: (kind_pass.get(kind, 0) / n if n else 1.0)
        for kind in BOOLEAN_KINDS
        if kind_present.get(kind, 0) > 0
    }
    return MetricReport(
        n_examples=n,
        per_constraint_accuracy=per_kind,
        constraint_counts={k: v for k, v in sorted(kind_present.items())},
        compositional_accuracy=(all_pass / n) if n else 1.0,
        bleu2=corpus_bleu2(overlap_pairs) if overlap_pairs else None,
        rouge_l=(sum(rouge_scores) / len(rouge_scores)) if rouge_scores else None,
    )
