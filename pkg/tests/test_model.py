"""Signatures, instances, serialization round trips, and structural invariants."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dialogtasks.model import (
    ComponentKind,
    Dialog,
    DialogItem,
    InvalidGroundingComponent,
    InvalidTarget,
    Provenance,
    TargetItem,
    TaskInstance,
    Turn,
    item_sort_key,
    parse_signature,
    signature_of,
    validate_instance,
)

S, E, A, R, C = (
    ComponentKind.STATE,
    ComponentKind.EVIDENCE,
    ComponentKind.ACTION,
    ComponentKind.RESPONSE,
    ComponentKind.CONTEXT,
)


def _provenance(tasks=("task",)):
    return Provenance(
        dataset="ds", dialog_id="d0", split="train", target_turn_index=1,
        source_tasks=tuple(tasks), seed=7,
    )


def _instance(grounding, target, task_name="task"):
    return TaskInstance(
        signature=signature_of([i.component for i in grounding], target.component),
        task_name=task_name,
        instruction="Provide the correct value.",
        context=(Turn("Speaker 1", "hello there ."),),
        grounding_items=tuple(grounding),
        target_item=target,
        provenance=_provenance((task_name,)),
    )


def test_signature_canonicalizes_grounding_order():
    assert signature_of([E, A], R).canonical_string() == "ICEA-R"
    assert signature_of([A, E], R).canonical_string() == "ICEA-R"
    assert signature_of([A, E], R) == signature_of([E, A], R)
    assert signature_of([A, A, S], R).canonical_string() == "ICSAA-R"


def test_signature_dimension_and_class():
    assert signature_of([], R).dimension() == 0
    assert signature_of([], R).is_atomic
    assert signature_of([A], R).is_atomic
    assert signature_of([A, A], R).is_compositional
    assert not signature_of([A], R).is_compositional


def test_parse_signature_round_trip():
    for text in ("IC-R", "ICA-R", "ICEA-R", "ICSAA-R", "ICS-S", "IC-E"):
        assert parse_signature(text).canonical_string() == text
    assert parse_signature("ICAE-R").canonical_string() == "ICEA-R"


def test_parse_signature_rejects_garbage():
    for text in ("", "nope", "IC-", "ICX-R", "ICA-C", "ICA"):
        with pytest.raises(ValueError):
            parse_signature(text)


def test_invalid_target_and_grounding():
    with pytest.raises(InvalidTarget):
        signature_of([A], C)
    with pytest.raises(InvalidGroundingComponent):
        signature_of([R], R)
    with pytest.raises(InvalidGroundingComponent):
        signature_of([C], R)


@given(
    st.lists(st.sampled_from([S, E, A]), max_size=5),
    st.sampled_from([S, E, A, R]),
)
def test_signature_string_matches_sorted_letters(grounding, target):
    sig = signature_of(grounding, target)
    order = {"S": 0, "E": 1, "A": 2}
    letters = "".join(sorted((c.value for c in grounding), key=order.__getitem__))
    assert sig.canonical_string() == f"IC{letters}-{target.value}"
    assert parse_signature(sig.canonical_string()) == sig


def test_instance_round_trip():
    item = DialogItem(A, "begins_with", "hello there", 1)
    inst = _instance([item], TargetItem(R, "response", "hello there friend ."))
    again = TaskInstance.from_dict(inst.to_dict())
    assert again == inst


def test_round_trip_restores_context_item_turn_index():
    turns = (
        Turn("Speaker 1", "hi .", (DialogItem(S, "emotion", "happiness", 0),)),
        Turn("Speaker 2", "hello .", (DialogItem(S, "emotion", "surprise", 1),)),
    )
    inst = TaskInstance(
        signature=signature_of([], R),
        task_name="task",
        instruction="x",
        context=turns,
        grounding_items=(),
        target_item=TargetItem(R, "response", "y"),
        provenance=_provenance(),
    )
    again = TaskInstance.from_dict(inst.to_dict())
    assert [i.turn_index for t in again.context for i in t.items] == [0, 1]


def test_validate_clean_instance():
    item = DialogItem(A, "begins_with", "hello", 1)
    inst = _instance([item], TargetItem(R, "response", "hello friend ."))
    assert validate_instance(inst) == []


def test_validate_reports_bad_component_and_empty_values():
    # A malformed item can be constructed; validate_instance reports it.
    bad = TaskInstance(
        signature=signature_of([A], R),
        task_name="task",
        instruction="",
        context=(Turn("Speaker 1", "hello there ."),),
        grounding_items=(DialogItem(C, "keywords", "", 1),),
        target_item=TargetItem(R, "response", ""),
        provenance=_provenance(),
    )
    problems = validate_instance(bad)
    assert "grounding item component must be S, E, or A" in problems
    assert "empty grounding item value" in problems
    assert "grounding/signature mismatch" in problems
    assert "empty target value" in problems
    assert "empty instruction" in problems


def test_validate_reports_target_mismatch():
    inst = _instance([], TargetItem(R, "response", "x"))
    broken = TaskInstance(
        signature=signature_of([], ComponentKind.ACTION),
        task_name="task",
        instruction="i",
        context=inst.context,
        grounding_items=(),
        target_item=inst.target_item,
        provenance=inst.provenance,
    )
    assert "target/signature mismatch" in validate_instance(broken)


def test_self_leak_requires_component_match():
    leak = _instance(
        [DialogItem(A, "emotion", "surprise", 1)],
        TargetItem(ComponentKind.ACTION, "emotion", "surprise"),
    )
    assert "self-leak" in validate_instance(leak)
    # An action phrase equal to the whole response is legal (boundary case).
    boundary = _instance(
        [DialogItem(A, "ends_with", "hello friend .", 1)],
        TargetItem(R, "response", "hello friend ."),
    )
    assert validate_instance(boundary) == []


def test_duplicate_grounding_item_detected():
    item = DialogItem(A, "begins_with", "hello", 1)
    dup = _instance([item, item], TargetItem(R, "response", "hello friend ."))
    assert "duplicate grounding item" in validate_instance(dup)


def test_item_sort_key_orders_components_canonically():
    items = [
        DialogItem(A, "begins_with", "b", 1),
        DialogItem(S, "emotion", "sad", 1),
        DialogItem(E, "persona", "p", 0),
        DialogItem(A, "begins_with", "a", 1),
    ]
    ordered = sorted(items, key=item_sort_key)
    assert [i.component for i in ordered] == [S, E, A, A]
    assert [i.value for i in ordered[2:]] == ["a", "b"]


def test_provenance_key_is_stable():
    assert _provenance(("a", "b")).key() == "ds/d0/t1/a+b"


def test_dialog_serialization():
    dialog = Dialog(
        dialog_id="d1",
        dataset="ds",
        turns=(Turn("Speaker 1", "hi .", (DialogItem(S, "emotion", "happiness", 0),)),),
        split="dev",
    )
    data = dialog.to_dict()
    assert data["split"] == "dev"
    assert data["turns"][0]["items"][0] == {"component": "S", "kind": "emotion", "value": "happiness"}
