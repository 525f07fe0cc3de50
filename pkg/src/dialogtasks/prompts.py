"""Prompt rendering: instruction templating, order-invariant section layout,
reasoning-prefix (chain-of-thought) transforms, and corpus-level rendering.

Layout contract: the Instruction section always comes first and the target
header always comes last; the dialog context and the grounding blocks in
between are shuffled per seed, so trained consumers become order invariant.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from importlib import resources
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .model import (
    ComponentKind,
    GROUNDING_ORDER,
    FIELD_NAMES,
    DialogItem,
    Provenance,
    TaskInstance,
    item_sort_key,
    signature_of,
)
from .seeding import subseed
from .textutil import join_natural

SECTION_INSTRUCTION = "Instruction:"
SECTION_CONTEXT = "Dialog Context:"

# One fixed header per component; the target header is the same string as the
# grounding block header for that component.
SECTION_HEADERS = {
    ComponentKind.STATE: "State:",
    ComponentKind.EVIDENCE: "Evidence:",
    ComponentKind.ACTION: "Actions:",
    ComponentKind.RESPONSE: "Response:",
}


class UnknownKind(KeyError):
    """Raised when an item kind has no phrase-table entry and fallback is off."""


class ShiftNotSubset(ValueError):
    """Raised when a reasoning shift names items the instance does not ground on."""


def _load_phrase_table() -> Dict[str, Dict[str, str]]:
    text = resources.files("dialogtasks.data").joinpath("phrases.json").read_text("utf-8")
    return json.loads(text)


_PHRASE_TABLE = _load_phrase_table()
PHRASES: Dict[str, str] = _PHRASE_TABLE["phrases"]
NAIVE_LABELS: Dict[str, str] = _PHRASE_TABLE["naive_labels"]


@dataclass(frozen=True)
class RenderOptions:
    """Rendering knobs; defaults match the shipped corpus format."""

    block_shuffle: bool = True
    generic_fallback: bool = False


@dataclass(frozen=True)
class RenderedExample:
    """The final (input text, output text) pair plus everything needed to trace it."""

    input_text: str
    output_text: str
    sections: Tuple[Tuple[str, str], ...]
    task_name: str
    signature: str
    seed: int
    provenance: Provenance

    def to_record(self) -> Dict[str, Any]:
        return {
            "input": self.input_text,
            "output": self.output_text,
            "task": self.task_name,
            "signature": self.signature,
            "dataset": self.provenance.dataset,
            "split": self.provenance.split,
            "provenance": self.provenance.to_dict(),
        }


def build_instruction(target: ComponentKind, grounding: Iterable[ComponentKind]) -> str:
    """Template grammar for instructions.

    Produces e.g. "Provide the correct value for response fields given the
    dialog context and action fields." — naming the dialog context plus every
    distinct grounding component, in canonical order, and nothing else.
    """
    present = sorted(set(grounding), key=GROUNDING_ORDER.__getitem__)
    fields = ["dialog context"] + [FIELD_NAMES[c] for c in present]
    return (
        f"Provide the correct value for {FIELD_NAMES[target]} fields "
        f"given the {join_natural(fields)} fields."
    )


def format_item_value(kind: str, value: str) -> str:
    """Kind-specific value formatting for the phrase table.

    Keyword lists are stored comma-joined; each keyword renders individually
    backquoted, e.g. ``thing'' and ``flat''.
    """
    if kind == "keywords":
        keywords = [k.strip() for k in value.split(",") if k.strip()]
        return join_natural([f"``{k}''" for k in keywords])
    return value


def phrase_for_item(item: DialogItem, generic_fallback: bool = False) -> str:
    """One rendered line for one grounding item."""
    template = PHRASES.get(item.kind)
    if template is None:
        if not generic_fallback:
            raise UnknownKind(item.kind)
        pretty = item.kind.replace("_", " ")
        return f"The {pretty} is: {item.value}"
    return template.format(value=format_item_value(item.kind, item.value))


def _context_body(inst: TaskInstance) -> str:
    return "\n".join(f"{turn.speaker}: {turn.text}" for turn in inst.context)


def _grounding_blocks(
    inst: TaskInstance, rng: random.Random, options: RenderOptions
) -> List[Tuple[str, str]]:
    """Group items by component into one block each, in canonical order."""
    by_component: Dict[ComponentKind, List[DialogItem]] = {}
    for item in inst.grounding_items:
        by_component.setdefault(item.component, []).append(item)
    blocks: List[Tuple[str, str]] = []
    for component in sorted(by_component, key=GROUNDING_ORDER.__getitem__):
        items = list(by_component[component])
        if options.block_shuffle and len(items) > 1:
            rng.shuffle(items)
        lines = [phrase_for_item(item, options.generic_fallback) for item in items]
        blocks.append((SECTION_HEADERS[component], "\n".join(lines)))
    return blocks


def _output_text(inst: TaskInstance) -> str:
    """Target value, preceded by any shifted reasoning items in canonical order."""
    prefix = [item.value for item in inst.cot_items]
    return "\n".join(prefix + [inst.target_item.value])


def _assemble(sections: List[Tuple[str, str]]) -> str:
    parts = []
    for label, body in sections:
        if label == SECTION_INSTRUCTION:
            parts.append(f"{label} {body}")
        elif body:
            parts.append(f"{label}\n{body}")
        else:
            parts.append(label)
    return "\n".join(parts)


def _assemble_naive(sections: List[Tuple[str, str]]) -> str:
    """Naive layout: native "Label: value" lines, no section blocks."""
    parts = []
    for label, body in sections:
        if label == SECTION_INSTRUCTION:
            parts.append(f"{label} {body}")
        elif label == SECTION_CONTEXT:
            parts.append(f"{label}\n{body}" if body else label)
        elif body:
            parts.append(f"{label} {body}")
        else:
            parts.append(label)
    return "\n".join(parts)


def render(inst: TaskInstance, seed: int, options: Optional[RenderOptions] = None) -> RenderedExample:
    """Render one instance to a prompt/completion pair.

    Standard style: [Instruction] ++ shuffle(seed, [Dialog Context] ++ grounding
    blocks) ++ [target header]. Naive style: fixed order with each item on its
    own natively labeled line.
    """
    options = options or RenderOptions()
    if inst.style == "naive":
        sections = _render_naive_sections(inst)
        input_text = _assemble_naive(sections)
    else:
        rng = random.Random(seed)
        middle: List[Tuple[str, str]] = [(SECTION_CONTEXT, _context_body(inst))]
        middle.extend(_grounding_blocks(inst, rng, options))
        rng.shuffle(middle)
        sections = [(SECTION_INSTRUCTION, inst.instruction)]
        sections.extend(middle)
        sections.append((SECTION_HEADERS[inst.signature.target], ""))
        input_text = _assemble(sections)
    return RenderedExample(
        input_text=input_text,
        output_text=_output_text(inst),
        sections=tuple(sections),
        task_name=inst.task_name,
        signature=inst.signature.canonical_string(),
        seed=seed,
        provenance=inst.provenance,
    )


def _render_naive_sections(inst: TaskInstance) -> List[Tuple[str, str]]:
    sections: List[Tuple[str, str]] = [(SECTION_INSTRUCTION, inst.instruction)]
    sections.append((SECTION_CONTEXT, _context_body(inst)))
    for item in inst.grounding_items:
        label = NAIVE_LABELS.get(item.kind, item.kind.replace("_", " ").title())
        sections.append((f"{label}:", item.value))
    sections.append((SECTION_HEADERS[inst.signature.target], ""))
    return sections


def cot_transform(inst: TaskInstance, shift: Iterable[DialogItem]) -> TaskInstance:
    """Shift a subset of grounding items from the input into the output.

    The returned instance grounds on the remaining items only; the shifted
    items render (header-free, in canonical component order) as reasoning text
    before the target value. An empty shift is the identity.
    """
    shifted = list(shift)
    if not shifted:
        return inst
    remaining = list(inst.grounding_items)
    for item in shifted:
        try:
            remaining.remove(item)
        except ValueError:
            raise ShiftNotSubset(f"item not in grounding: {item!r}") from None
    ordered_shift = sorted(shifted, key=item_sort_key)
    new_signature = signature_of((i.component for i in remaining), inst.signature.target)
    return replace(
        inst,
        signature=new_signature,
        grounding_items=tuple(remaining),
        cot_items=inst.cot_items + tuple(ordered_shift),
        instruction=build_instruction(new_signature.target, new_signature.grounding),
    )


def apply_cot(instances: List[TaskInstance], mode: str, seed: int) -> List[TaskInstance]:
    """Bulk reasoning-shift helper for the CLI: mode is "none" or "random-K"."""
    if mode == "none":
        return list(instances)
    if not mode.startswith("random-"):
        raise ValueError(f"unknown cot mode: {mode!r}")
    k = int(mode.split("-", 1)[1])
    out = []
    for inst in instances:
        rng = random.Random(subseed(seed, "cot", inst.provenance.key(), inst.task_name))
        take = min(k, len(inst.grounding_items))
        shift = rng.sample(list(inst.grounding_items), take) if take else []
        out.append(cot_transform(inst, shift))
    return out


def render_corpus(
    instances: Iterable[TaskInstance],
    seed: int,
    options: Optional[RenderOptions] = None,
) -> Tuple[List[RenderedExample], List[Dict[str, Any]]]:
    """Render every instance with a per-instance derived seed.

    Deterministic and order-preserving; per-instance failures are collected as
    error records with provenance instead of aborting the batch.
    """
    rendered: List[RenderedExample] = []
    errors: List[Dict[str, Any]] = []
    for inst in instances:
        inst_seed = subseed(seed, "render", inst.provenance.key(), inst.task_name)
        try:
            rendered.append(render(inst, inst_seed, options))
        except (UnknownKind, ValueError) as exc:
            errors.append(
                {
                    "task_name": inst.task_name,
                    "provenance": inst.provenance.to_dict(),
                    "error": f"{type(exc).__name__}: {exc}",
                }
            )
    return rendered, errors
