"""Composition: merge two task instances into one higher-dimensional task.

Two instances are composable only at the same dialog position, with the same
target, no output-into-input leakage, no repeated source task, and a rule in
the rule table matching their signatures in either order. Composition is
symmetric: compose(a, b) and compose(b, a) build the identical instance.
"""

from __future__ import annotations

import csv
import importlib.resources
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .model import (
    ComponentKind,
    Provenance,
    TaskInstance,
    TaskSignature,
    instance_sort_key,
    item_sort_key,
    parse_signature,
    signature_of,
    validate_instance,
)
from .prompts import build_instruction
from .seeding import stable_hash

REASON_DIFFERENT_CONTEXT = "different dialog context"
REASON_LEAK = "output leaks into input"
REASON_TARGETS_DIFFER = "targets differ"
REASON_DUPLICATE_TASK = "duplicate task type"
REASON_NO_RULE = "no matching rule"
REASON_DUPLICATE_ITEM = "duplicate grounding item"


class RuleFormatError(ValueError):
    """A rule file row that does not parse; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class CompositionRule:
    """One row of the rule table.

    first/second match input signatures in either order. composed_display is
    the row's result name as written; the canonical composed signature is
    always rebuilt from the merged grounding, so display aliases that fold
    target letters into the name (e.g. ICAES-A) stay cosmetic.
    """

    rule_id: int
    first: TaskSignature
    second: TaskSignature
    composed_display: str
    common: Tuple[str, ...]
    target: ComponentKind

    def matches(self, a: TaskSignature, b: TaskSignature) -> bool:
        return (self.first, self.second) in ((a, b), (b, a))

    def composed(self, a: TaskSignature, b: TaskSignature) -> TaskSignature:
        return signature_of(a.grounding + b.grounding, self.target)


@dataclass(frozen=True)
class Rejection:
    """Why a pair refused to compose."""

    reason: str
    first_task: str = ""
    second_task: str = ""


@dataclass(frozen=True)
class CompositionCandidate:
    """One enumerated pair and its outcome."""

    first: TaskInstance
    second: TaskInstance
    result: Union[TaskInstance, Rejection]


def load_rules(path: Optional[str | Path] = None) -> List[CompositionRule]:
    """Load a rule table; the packaged default when no path is given.

    Rows are id,first,second,composed,common,target; "#" lines and blanks are
    skipped. Raises RuleFormatError on malformed rows.
    """
    if path is None:
        text = (importlib.resources.files("dialogtasks.data") / "rules.csv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    rules: List[CompositionRule] = []
    for line_number, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or row[0].lstrip().startswith("#") or not "".join(row).strip():
            continue
        if len(row) != 6:
            raise RuleFormatError(line_number, f"expected 6 columns, got {len(row)}")
        try:
            rule = CompositionRule(
                rule_id=int(row[0]),
                first=parse_signature(row[1].strip()),
                second=parse_signature(row[2].strip()),
                composed_display=row[3].strip(),
                common=tuple(part.strip() for part in row[4].split(";") if part.strip()),
                target=ComponentKind(row[5].strip().upper()),
            )
        except ValueError as exc:
            raise RuleFormatError(line_number, str(exc)) from exc
        if not rule.composed_display:
            raise RuleFormatError(line_number, "empty composed name")
        if rule.target not in (rule.first.target, rule.second.target):
            raise RuleFormatError(line_number, "composed target matches neither input target")
        rules.append(rule)
    if not rules:
        raise RuleFormatError(0, "rule table has no rows")
    return rules


def find_rule(
    a: TaskSignature, b: TaskSignature, rules: Sequence[CompositionRule]
) -> Optional[CompositionRule]:
    """First rule matching the signature pair in either order."""
    for rule in rules:
        if rule.matches(a, b):
            return rule
    return None


def _item_keys(inst: TaskInstance) -> List[Tuple[str, str, str, int]]:
    return [(i.component.value, i.kind, i.value, i.turn_index) for i in inst.grounding_items]


def infeasibility_guard(
    a: TaskInstance, b: TaskInstance, rules: Sequence[CompositionRule]
) -> Optional[str]:
    """The reason this pair must not compose, or None if it may.

    Checks run in a fixed order so the reported reason is deterministic:
    position, leakage, target, task repetition, rule coverage, item overlap.
    Leakage outranks everything past position: a pair where one task's input
    spells out the other's answer is reported as a leak even when no rule
    covers the pair anyway.
    """
    pa, pb = a.provenance, b.provenance
    same_position = (
        pa.dataset == pb.dataset
        and pa.dialog_id == pb.dialog_id
        and pa.target_turn_index == pb.target_turn_index
    )
    if not same_position or a.context != b.context:
        return REASON_DIFFERENT_CONTEXT
    for x, y in ((a, b), (b, a)):
        for item in x.grounding_items:
            if item.value == y.target_item.value:
                return REASON_LEAK
    if a.target_item != b.target_item:
        return REASON_TARGETS_DIFFER
    if set(pa.source_tasks) & set(pb.source_tasks):
        return REASON_DUPLICATE_TASK
    if find_rule(a.signature, b.signature, rules) is None:
        return REASON_NO_RULE
    merged = _item_keys(a) + _item_keys(b)
    if len(set(merged)) != len(merged):
        return REASON_DUPLICATE_ITEM
    return None


def compose(
    a: TaskInstance, b: TaskInstance, rules: Sequence[CompositionRule]
) -> Union[TaskInstance, Rejection]:
    """Compose two instances under the rule table, or explain the refusal.

    The composed instance is independent of argument order: grounding items
    are merged in canonical order, the name joins the sorted source task
    names with " + ", and the seed hashes the sorted parent seeds.
    """
    reason = infeasibility_guard(a, b, rules)
    if reason is not None:
        return Rejection(reason, a.task_name, b.task_name)
    rule = find_rule(a.signature, b.signature, rules)
    assert rule is not None  # guard already checked coverage
    items = tuple(sorted(a.grounding_items + b.grounding_items, key=item_sort_key))
    components = tuple(item.component for item in items)
    signature = signature_of(components, rule.target)
    sources = tuple(sorted(set(a.provenance.source_tasks) | set(b.provenance.source_tasks)))
    pa, pb = a.provenance, b.provenance
    composed = TaskInstance(
        signature=signature,
        task_name=" + ".join(sources),
        instruction=build_instruction(rule.target, components),
        context=a.context,
        grounding_items=items,
        target_item=a.target_item,
        provenance=Provenance(
            dataset=pa.dataset,
            dialog_id=pa.dialog_id,
            split=pa.split,
            target_turn_index=pa.target_turn_index,
            source_tasks=sources,
            seed=stable_hash("compose", *sorted((pa.seed, pb.seed))),
        ),
    )
    problems = validate_instance(composed)
    if problems:  # pragma: no cover - guard should make this unreachable
        return Rejection("; ".join(problems), a.task_name, b.task_name)
    return composed


def _dedup_key(inst: TaskInstance) -> Tuple[str, Tuple[Tuple[str, str, str, int], ...]]:
    return (inst.task_name, tuple(sorted(_item_keys(inst))))


def compose_corpus(
    instances: Iterable[TaskInstance],
    rules: Sequence[CompositionRule],
    max_dim: int = 2,
) -> Tuple[List[TaskInstance], Counter]:
    """All composites derivable from a corpus, with rejection-reason counts.

    Pairs are enumerated within each dialog position. With max_dim > 2,
    composites are re-paired with atomic instances for another round; the
    packaged rule table only covers atomic pairs, so higher rounds need a
    custom table. Output is deduplicated and canonically sorted.
    """
    if max_dim < 2:
        raise ValueError("max_dim must be >= 2")
    pool = [
        inst
        for inst in instances
        if inst.signature.is_atomic and inst.style == "standard" and not inst.cot_items
    ]
    groups: Dict[Tuple[str, str, int], List[TaskInstance]] = {}
    for inst in pool:
        key = (inst.provenance.dataset, inst.provenance.dialog_id, inst.provenance.target_turn_index)
        groups.setdefault(key, []).append(inst)

    reasons: Counter = Counter()
    seen: Dict[Tuple[str, str, int], set] = {}
    composites: List[TaskInstance] = []

    def attempt(x: TaskInstance, y: TaskInstance, key: Tuple[str, str, int]) -> Optional[TaskInstance]:
        result = compose(x, y, rules)
        if isinstance(result, Rejection):
            reasons[result.reason] += 1
            return None
        dedup = _dedup_key(result)
        bucket = seen.setdefault(key, set())
        if dedup in bucket:
            return None
        bucket.add(dedup)
        return result

    for key in sorted(groups):
        members = sorted(groups[key], key=instance_sort_key)
        frontier: List[TaskInstance] = []
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                made = attempt(members[i], members[j], key)
                if made is not None:
                    frontier.append(made)
        composites.extend(frontier)
        dim = 3
        while dim <= max_dim and frontier:
            next_frontier: List[TaskInstance] = []
            for composite in frontier:
                for atom in members:
                    made = attempt(composite, atom, key)
                    if made is not None:
                        next_frontier.append(made)
            composites.extend(next_frontier)
            frontier = next_frontier
            dim += 1
    composites.sort(key=instance_sort_key)
    return composites, reasons


def naive_corpus(
    instances: Iterable[TaskInstance], rules: Sequence[CompositionRule]
) -> List[TaskInstance]:
    """Naive baseline composites for exactly the pairs the guard would accept.

    Mirrors compose_corpus pair enumeration so the baseline stays comparable
    instance-for-instance with rule-based composition.
    """
    pool = [
        inst
        for inst in instances
        if inst.signature.is_atomic and inst.style == "standard" and not inst.cot_items
    ]
    groups: Dict[Tuple[str, str, int], List[TaskInstance]] = {}
    for inst in pool:
        key = (inst.provenance.dataset, inst.provenance.dialog_id, inst.provenance.target_turn_index)
        groups.setdefault(key, []).append(inst)
    composites: List[TaskInstance] = []
    for key in sorted(groups):
        members = sorted(groups[key], key=instance_sort_key)
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                if infeasibility_guard(members[i], members[j], rules) is None:
                    composites.append(naive_compose(members[i], members[j]))
    composites.sort(key=instance_sort_key)
    return composites


def _lower_first(text: str) -> str:
    return text[:1].lower() + text[1:]


def naive_compose(a: TaskInstance, b: TaskInstance) -> TaskInstance:
    """Baseline composition: concatenate instructions, keep items in given order.

    No infeasibility checks run; callers pair instances that share a position
    and target. Rendering a naive instance skips section shuffling and labels
    each grounding item with its bare family name.
    """
    items = a.grounding_items + b.grounding_items
    components = tuple(item.component for item in items)
    pa, pb = a.provenance, b.provenance
    return TaskInstance(
        signature=signature_of(components, a.target_item.component),
        task_name=f"{a.task_name} + {b.task_name}",
        instruction=f"{a.instruction} and {_lower_first(b.instruction)}",
        context=a.context,
        grounding_items=items,
        target_item=a.target_item,
        provenance=Provenance(
            dataset=pa.dataset,
            dialog_id=pa.dialog_id,
            split=pa.split,
            target_turn_index=pa.target_turn_index,
            source_tasks=pa.source_tasks + pb.source_tasks,
            seed=stable_hash("naive", pa.seed, pb.seed),
        ),
        style="naive",
    )
