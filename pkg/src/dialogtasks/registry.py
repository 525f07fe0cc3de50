"""Atomic task registry: the 18 task types derivable from an annotated dialog.

Every deriver answers the same question for one dialog and one target turn t:
what instruction, grounding items, and gold target does this task type yield
here? Conventions shared by all derivers:

- Prediction and generation tasks see the context exclusively (turns[:t]) and
  their gold value comes from turn t. An item family stored on turn t that is
  used as an input constraint becomes an Action (it constrains a turn the
  model cannot see).
- Tagging tasks see the context inclusively (turns[:t+1]) and label the last
  visible utterance, so their target is a State.
- Evidence items stay Evidence everywhere; they describe participants or
  facts, not the hidden turn.

Derivers raise a DerivationError subclass when a dialog position cannot host
the task; derive_corpus skips those positions silently.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .model import (
    ComponentKind,
    Dialog,
    DialogItem,
    Provenance,
    TargetItem,
    TaskInstance,
    item_sort_key,
    parse_signature,
    signature_of,
    validate_instance,
)
from .prompts import build_instruction
from .seeding import subseed
from .textutil import is_content_token, join_natural, length_class, tokenize

S = ComponentKind.STATE
E = ComponentKind.EVIDENCE
A = ComponentKind.ACTION
R = ComponentKind.RESPONSE


class DerivationError(ValueError):
    """This dialog position cannot host this task type."""


class TooShort(DerivationError):
    """The target turn has too few tokens for the requested span."""


class NoContentTokens(DerivationError):
    """The target turn has no keyword candidates after stopword filtering."""


class GoldMissing(DerivationError):
    """The dialog lacks the annotation item the task needs."""


@dataclass(frozen=True)
class AtomicTaskDef:
    """One registered atomic task type.

    derive(dialog, turn_index, seed) builds the instance for one target turn
    or raises DerivationError. item_kinds lists the item families consumed, so
    callers can tell which tasks a corpus supports without trial derivation.
    """

    name: str
    signature: str
    description: str
    item_kinds: Tuple[str, ...]
    derive: Callable[[Dialog, int, int], TaskInstance]


# ---------------------------------------------------------------------------
# Span and keyword extraction over the gold response
# ---------------------------------------------------------------------------

PHRASE_LENGTHS = (2, 3, 4)
MAX_KEYWORDS = 3


def rank_keywords(text: str) -> List[str]:
    """Keyword candidates of a text, best first.

    Candidates are alphabetic non-stopword tokens. Rank by frequency (desc,
    case-folded), then first occurrence (asc), then the folded form; the first
    surface form of each folded token is kept.
    """
    tokens = tokenize(text)
    freq: Counter[str] = Counter()
    first_pos: Dict[str, int] = {}
    surface: Dict[str, str] = {}
    for pos, token in enumerate(tokens):
        if not is_content_token(token):
            continue
        folded = token.lower()
        freq[folded] += 1
        if folded not in first_pos:
            first_pos[folded] = pos
            surface[folded] = token
    ranked = sorted(first_pos, key=lambda folded: (-freq[folded], first_pos[folded], folded))
    return [surface[folded] for folded in ranked]


def select_keywords(text: str, rng: random.Random) -> List[str]:
    """Pick 1-3 keywords from a text, preserving rank order."""
    ranked = rank_keywords(text)
    if not ranked:
        raise NoContentTokens("no keyword candidates")
    count = rng.randint(1, min(MAX_KEYWORDS, len(ranked)))
    picked = sorted(rng.sample(range(len(ranked)), count))
    return [ranked[i] for i in picked]


def _corrupt_tokens(tokens: Sequence[str], rng: random.Random) -> List[str]:
    """Deterministically perturb a token sequence into a non-identical draft."""
    if len(tokens) < 2:
        raise TooShort("need at least two tokens to build a draft")
    draft = list(tokens)
    op = rng.choice(("drop", "duplicate", "swap"))
    index = rng.randrange(len(draft))
    if op == "drop":
        del draft[index]
    elif op == "duplicate":
        draft.insert(index, draft[index])
    else:
        index = min(index, len(draft) - 2)
        draft[index], draft[index + 1] = draft[index + 1], draft[index]
    if draft == list(tokens):  # swapped a repeated token
        del draft[-1]
    return draft


# ---------------------------------------------------------------------------
# Shared derivation plumbing
# ---------------------------------------------------------------------------

def _target_tokens(dialog: Dialog, turn_index: int) -> List[str]:
    tokens = tokenize(dialog.turns[turn_index].text)
    if not tokens:
        raise TooShort(f"turn {turn_index} has no tokens")
    return tokens


def _turn_item(dialog: Dialog, turn_index: int, kind: str) -> DialogItem:
    for item in dialog.turns[turn_index].items:
        if item.kind == kind:
            return item
    raise GoldMissing(f"turn {turn_index} has no {kind} item")


def _speaker_item(dialog: Dialog, turn_index: int, kind: str, rng: random.Random) -> DialogItem:
    """An item of the given kind attached to any turn of the target speaker."""
    speaker = dialog.turns[turn_index].speaker
    candidates = [
        item
        for turn in dialog.turns[: turn_index + 1]
        for item in turn.items
        if item.kind == kind and dialog.turns[item.turn_index].speaker == speaker
    ]
    if not candidates:
        raise GoldMissing(f"speaker of turn {turn_index} has no {kind} item")
    return rng.choice(sorted(candidates, key=item_sort_key))


def _build(
    dialog: Dialog,
    turn_index: int,
    name: str,
    grounding: Sequence[DialogItem],
    target: TargetItem,
    seed: int,
    include_target_turn: bool = False,
) -> TaskInstance:
    if turn_index < 1 or turn_index >= len(dialog.turns):
        raise DerivationError(f"target turn {turn_index} out of range")
    end = turn_index + 1 if include_target_turn else turn_index
    ordered = tuple(sorted(grounding, key=item_sort_key))
    components = tuple(item.component for item in ordered)
    inst = TaskInstance(
        signature=signature_of(components, target.component),
        task_name=name,
        instruction=build_instruction(target.component, components),
        context=dialog.turns[:end],
        grounding_items=ordered,
        target_item=target,
        provenance=Provenance(
            dataset=dialog.dataset,
            dialog_id=dialog.dialog_id,
            split=dialog.split,
            target_turn_index=turn_index,
            source_tasks=(name,),
            seed=seed,
        ),
    )
    problems = validate_instance(inst)
    if problems:
        raise DerivationError(f"{name} at turn {turn_index}: {'; '.join(problems)}")
    return inst


# ---------------------------------------------------------------------------
# Response-target derivers
# ---------------------------------------------------------------------------

def _derive_response_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    _target_tokens(dialog, t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "response_generation", (), target, seed)


def _derive_beginswith(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    tokens = _target_tokens(dialog, t)
    lengths = [k for k in PHRASE_LENGTHS if k <= len(tokens)]
    if not lengths:
        raise TooShort(f"turn {t} shorter than every phrase length")
    rng = random.Random(seed)
    k = rng.choice(lengths)
    item = DialogItem(A, "begins_with", " ".join(tokens[:k]), t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "beginswith_controlled_generation", (item,), target, seed)


def _derive_endswith(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    tokens = _target_tokens(dialog, t)
    lengths = [k for k in PHRASE_LENGTHS if k <= len(tokens)]
    if not lengths:
        raise TooShort(f"turn {t} shorter than every phrase length")
    rng = random.Random(seed)
    k = rng.choice(lengths)
    item = DialogItem(A, "ends_with", " ".join(tokens[-k:]), t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "endswith_controlled_generation", (item,), target, seed)


def _derive_keyword_controlled(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    keywords = select_keywords(dialog.turns[t].text, random.Random(seed))
    item = DialogItem(A, "keywords", ", ".join(keywords), t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "keyword_controlled_generation", (item,), target, seed)


def _derive_response_generation_length(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    tokens = _target_tokens(dialog, t)
    item = DialogItem(A, "length_class", length_class(len(tokens)), t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "response_generation_length", (item,), target, seed)


def _derive_edit_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    tokens = _target_tokens(dialog, t)
    draft = _corrupt_tokens(tokens, random.Random(seed))
    item = DialogItem(A, "draft_response", " ".join(draft), t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "edit_generation", (item,), target, seed)


def _derive_emotion_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    _target_tokens(dialog, t)
    label = _turn_item(dialog, t, "emotion")
    item = DialogItem(A, "emotion", label.value, t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "emotion_generation", (item,), target, seed)


def _derive_act_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    _target_tokens(dialog, t)
    label = _turn_item(dialog, t, "dialog_act")
    item = DialogItem(A, "dialog_act", label.value, t)
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "act_generation", (item,), target, seed)


def _derive_persona_grounded_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    _target_tokens(dialog, t)
    item = _speaker_item(dialog, t, "persona", random.Random(seed))
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "persona_grounded_generation", (item,), target, seed)


def _derive_knowledge_grounded_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    _target_tokens(dialog, t)
    item = _turn_item(dialog, t, "knowledge")
    target = TargetItem(R, "response", dialog.turns[t].text)
    return _build(dialog, t, "knowledge_grounded_generation", (item,), target, seed)


# ---------------------------------------------------------------------------
# Action-target derivers (predict a property of the hidden next turn)
# ---------------------------------------------------------------------------

def _derive_response_length_prediction(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    tokens = _target_tokens(dialog, t)
    target = TargetItem(A, "length_class", length_class(len(tokens)))
    return _build(dialog, t, "response_length_prediction", (), target, seed)


def _derive_emotion_prediction(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    label = _turn_item(dialog, t, "emotion")
    target = TargetItem(A, "emotion", label.value)
    return _build(dialog, t, "emotion_prediction", (), target, seed)


def _derive_act_prediction(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    label = _turn_item(dialog, t, "dialog_act")
    target = TargetItem(A, "dialog_act", label.value)
    return _build(dialog, t, "act_prediction", (), target, seed)


def _derive_keyword_prediction(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    keywords = select_keywords(dialog.turns[t].text, random.Random(seed))
    target = TargetItem(A, "keywords", ", ".join(keywords))
    return _build(dialog, t, "keyword_prediction", (), target, seed)


# ---------------------------------------------------------------------------
# State-target derivers (label the last visible utterance)
# ---------------------------------------------------------------------------

def _derive_emotion_tagging(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    label = _turn_item(dialog, t, "emotion")
    target = TargetItem(S, "emotion", label.value)
    return _build(dialog, t, "emotion_tagging", (), target, seed, include_target_turn=True)


def _derive_act_classification(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    label = _turn_item(dialog, t, "dialog_act")
    target = TargetItem(S, "dialog_act", label.value)
    return _build(dialog, t, "act_classification", (), target, seed, include_target_turn=True)


# ---------------------------------------------------------------------------
# Evidence-target derivers (produce the grounding the next turn relies on)
# ---------------------------------------------------------------------------

def _derive_persona_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    item = _speaker_item(dialog, t, "persona", random.Random(seed))
    target = TargetItem(E, "persona", item.value)
    return _build(dialog, t, "persona_generation", (), target, seed)


def _derive_knowledge_generation(dialog: Dialog, t: int, seed: int) -> TaskInstance:
    item = _turn_item(dialog, t, "knowledge")
    target = TargetItem(E, "knowledge", item.value)
    return _build(dialog, t, "knowledge_generation", (), target, seed)


_DEFS = (
    AtomicTaskDef(
        "beginswith_controlled_generation", "ICA-R",
        "Generate the next turn so it starts with a given phrase.",
        ("begins_with",), _derive_beginswith,
    ),
    AtomicTaskDef(
        "endswith_controlled_generation", "ICA-R",
        "Generate the next turn so it ends with a given phrase.",
        ("ends_with",), _derive_endswith,
    ),
    AtomicTaskDef(
        "keyword_controlled_generation", "ICA-R",
        "Generate the next turn so it contains given keywords.",
        ("keywords",), _derive_keyword_controlled,
    ),
    AtomicTaskDef(
        "response_generation_length", "ICA-R",
        "Generate the next turn at a given length class.",
        ("length_class",), _derive_response_generation_length,
    ),
    AtomicTaskDef(
        "edit_generation", "ICA-R",
        "Rewrite a draft into the correct next turn.",
        ("draft_response",), _derive_edit_generation,
    ),
    AtomicTaskDef(
        "emotion_generation", "ICA-R",
        "Generate the next turn expressing a given emotion.",
        ("emotion",), _derive_emotion_generation,
    ),
    AtomicTaskDef(
        "act_generation", "ICA-R",
        "Generate the next turn realizing a given dialog act.",
        ("dialog_act",), _derive_act_generation,
    ),
    AtomicTaskDef(
        "persona_grounded_generation", "ICE-R",
        "Generate the next turn consistent with a persona line.",
        ("persona",), _derive_persona_grounded_generation,
    ),
    AtomicTaskDef(
        "knowledge_grounded_generation", "ICE-R",
        "Generate the next turn grounded in a knowledge snippet.",
        ("knowledge",), _derive_knowledge_grounded_generation,
    ),
    AtomicTaskDef(
        "response_generation", "IC-R",
        "Generate the next turn from the dialog context alone.",
        (), _derive_response_generation,
    ),
    AtomicTaskDef(
        "response_length_prediction", "IC-A",
        "Predict the length class of the hidden next turn.",
        (), _derive_response_length_prediction,
    ),
    AtomicTaskDef(
        "emotion_prediction", "IC-A",
        "Predict the emotion of the hidden next turn.",
        ("emotion",), _derive_emotion_prediction,
    ),
    AtomicTaskDef(
        "act_prediction", "IC-A",
        "Predict the dialog act of the hidden next turn.",
        ("dialog_act",), _derive_act_prediction,
    ),
    AtomicTaskDef(
        "keyword_prediction", "IC-A",
        "Predict keywords of the hidden next turn.",
        (), _derive_keyword_prediction,
    ),
    AtomicTaskDef(
        "emotion_tagging", "IC-S",
        "Label the emotion of the last visible utterance.",
        ("emotion",), _derive_emotion_tagging,
    ),
    AtomicTaskDef(
        "act_classification", "IC-S",
        "Label the dialog act of the last visible utterance.",
        ("dialog_act",), _derive_act_classification,
    ),
    AtomicTaskDef(
        "persona_generation", "IC-E",
        "Produce a persona line for the next speaker.",
        ("persona",), _derive_persona_generation,
    ),
    AtomicTaskDef(
        "knowledge_generation", "IC-E",
        "Produce the knowledge snippet the next turn relies on.",
        ("knowledge",), _derive_knowledge_generation,
    ),
)

REGISTRY: Dict[str, AtomicTaskDef] = {d.name: d for d in _DEFS}
assert len(REGISTRY) == len(_DEFS), "duplicate task name in registry"
for _def in _DEFS:
    assert parse_signature(_def.signature).is_atomic, f"{_def.name} is not atomic"


def list_tasks() -> List[AtomicTaskDef]:
    """All registered atomic tasks, sorted by name."""
    return sorted(_DEFS, key=lambda d: d.name)


def derive_task(
    name: str, dialog: Dialog, turn_index: int, seed: int
) -> TaskInstance:
    """Derive one named task at one dialog position; DerivationError if impossible."""
    if name not in REGISTRY:
        raise KeyError(f"unknown task: {name!r}")
    return REGISTRY[name].derive(dialog, turn_index, subseed(seed, "derive", dialog.dialog_id, turn_index, name))


def derive_corpus(
    dialogs: Iterable[Dialog],
    seed: int,
    tasks: Optional[Iterable[str]] = None,
) -> List[TaskInstance]:
    """Derive every hostable instance of the selected tasks over a corpus.

    Walks every dialog and every target turn t in [1, len(turns)); positions
    that cannot host a task are skipped. Output order is deterministic:
    dialogs in input order, turns ascending, tasks by name.
    """
    names = sorted(tasks) if tasks is not None else sorted(REGISTRY)
    for name in names:
        if name not in REGISTRY:
            raise KeyError(f"unknown task: {name!r}")
    instances: List[TaskInstance] = []
    for dialog in dialogs:
        for t in range(1, len(dialog.turns)):
            for name in names:
                try:
                    instances.append(derive_task(name, dialog, t, seed))
                except DerivationError:
                    continue
    return instances


# Plural family names for the candidate sentence of discriminative variants.
_FAMILY_PLURALS = {
    "emotion": "emotions",
    "dialog_act": "dialog acts",
    "length_class": "length classes",
}


def discriminative_variant(inst: TaskInstance, candidates: Sequence[str]) -> TaskInstance:
    """Recast a label-target instance as a discriminative (multiple choice) one.

    Adds a State grounding item spelling out the candidate labels, e.g.
    "Candidate emotions are sad, happy, and mad." The gold value must be among
    the candidates; candidate order is preserved as given.
    """
    if inst.target_item.component == R:
        raise ValueError("discriminative variant requires a label target, not a response")
    if inst.target_item.value not in candidates:
        raise ValueError("gold value missing from candidates")
    family = _FAMILY_PLURALS.get(
        inst.target_item.kind, inst.target_item.kind.replace("_", " ") + " values"
    )
    sentence = f"Candidate {family} are {join_natural(list(candidates))}."
    extra = DialogItem(S, "candidates", sentence, inst.provenance.target_turn_index)
    grounding = tuple(sorted(inst.grounding_items + (extra,), key=item_sort_key))
    components = tuple(item.component for item in grounding)
    name = inst.task_name + "_discriminative"
    return replace(
        inst,
        signature=signature_of(components, inst.target_item.component),
        task_name=name,
        instruction=build_instruction(inst.target_item.component, components),
        grounding_items=grounding,
        provenance=replace(inst.provenance, source_tasks=(name,)),
    )
