"""Prompt rendering: phrase table, layout invariants, reasoning shifts."""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialogtasks.composer import compose, load_rules
from dialogtasks.model import (
    ComponentKind,
    Dialog,
    DialogItem,
    Provenance,
    TargetItem,
    TaskInstance,
    Turn,
    signature_of,
)
from dialogtasks.prompts import (
    NAIVE_LABELS,
    PHRASES,
    RenderOptions,
    SECTION_CONTEXT,
    SECTION_HEADERS,
    SECTION_INSTRUCTION,
    ShiftNotSubset,
    UnknownKind,
    apply_cot,
    build_instruction,
    cot_transform,
    format_item_value,
    phrase_for_item,
    render,
    render_corpus,
)
from dialogtasks.registry import derive_task

S = ComponentKind.STATE
E = ComponentKind.EVIDENCE
A = ComponentKind.ACTION
R = ComponentKind.RESPONSE

DIALOG = Dialog(
    dialog_id="d0",
    dataset="hand",
    turns=(
        Turn("Speaker 1", "how was the flat hunt ?"),
        Turn(
            "Speaker 2",
            "the flat came furnished which was the important thing .",
            (
                DialogItem(S, "emotion", "surprise", 1),
                DialogItem(A, "dialog_act", "inform", 1),
            ),
        ),
    ),
)


def _instance(items, target, name="hand_task", instruction=None):
    signature = signature_of((i.component for i in items), target.component)
    return TaskInstance(
        task_name=name,
        signature=signature,
        instruction=instruction
        or build_instruction(target.component, (i.component for i in items)),
        context=DIALOG.turns[:1],
        grounding_items=tuple(items),
        target_item=target,
        provenance=Provenance("hand", "d0", "train", 1, (name,), 7),
    )


RESPONSE_TARGET = TargetItem(R, "response", "the flat came furnished .")


def test_build_instruction_exact_strings():
    assert build_instruction(R, [A]) == (
        "Provide the correct value for response fields given the "
        "dialog context and action fields."
    )
    assert build_instruction(R, []) == (
        "Provide the correct value for response fields given the "
        "dialog context fields."
    )
    assert build_instruction(A, [E, S, A]) == (
        "Provide the correct value for action fields given the "
        "dialog context, state, evidence, and action fields."
    )
    # Duplicates collapse: two action items still read "action fields" once.
    assert build_instruction(R, [A, A]) == build_instruction(R, [A])


def test_phrase_table_goldens():
    cases = {
        ("begins_with", "Absolutely . That's"): (
            "The response should start with this initial phrase: ``Absolutely . That's''"
        ),
        ("ends_with", "came furnished ."): (
            "The final sentence of the response should be: ``came furnished .''"
        ),
        ("keywords", "thing, flat"): (
            "The response should contain the following keywords: ``thing'' and ``flat''"
        ),
        ("length_class", "short"): "The length of the next response should be: short",
        ("emotion", "surprise"): "The emotion of the next turn should be: surprise",
        ("dialog_act", "inform"): "The dialog act of the next response should be: inform",
        ("persona", "i paint ."): "Persona of the speaker: i paint .",
        ("knowledge", "flats exist ."): "Relevant knowledge: flats exist .",
        ("draft_response", "teh flat"): (
            "The previous version of the response to be corrected: teh flat"
        ),
        ("candidates", "Candidate emotions are sad and mad."): (
            "Candidate emotions are sad and mad."
        ),
    }
    for (kind, value), expected in cases.items():
        item = DialogItem(A if kind != "candidates" else S, kind, value, 1)
        assert phrase_for_item(item) == expected, kind


def test_keyword_values_render_individually_quoted():
    assert format_item_value("keywords", "thing") == "``thing''"
    assert format_item_value("keywords", "a, b, c") == "``a'', ``b'', and ``c''"
    assert format_item_value("emotion", "sad, mad") == "sad, mad"


def test_unknown_kind_raises_unless_fallback():
    item = DialogItem(A, "mystery_kind", "x", 1)
    with pytest.raises(UnknownKind):
        phrase_for_item(item)
    assert phrase_for_item(item, generic_fallback=True) == "The mystery kind is: x"


def test_phrase_and_label_tables_cover_same_kinds():
    assert set(NAIVE_LABELS) == set(PHRASES)


def test_render_layout_instruction_first_target_header_last():
    inst = _instance([DialogItem(A, "emotion", "surprise", 1)], RESPONSE_TARGET)
    for seed in range(12):
        ex = render(inst, seed)
        assert ex.sections[0] == (SECTION_INSTRUCTION, inst.instruction)
        assert ex.sections[-1] == (SECTION_HEADERS[R], "")
        assert ex.input_text.startswith("Instruction: Provide the correct value")
        assert ex.input_text.endswith("Response:")
        assert ex.output_text == "the flat came furnished ."


def test_render_groups_items_by_component():
    items = [
        DialogItem(A, "begins_with", "the flat", 1),
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(A, "length_class", "short", 1),
    ]
    ex = render(_instance(items, RESPONSE_TARGET), 3, RenderOptions(block_shuffle=False))
    labels = [label for label, _ in ex.sections]
    # Two action items share one "Actions:" block; the target header is "Response:".
    assert labels.count("Actions:") == 1
    assert labels.count("State:") == 1
    assert labels[-1] == "Response:"
    action_bodies = [b for l, b in ex.sections[1:-1] if l == "Actions:"]
    assert action_bodies == [
        "The response should start with this initial phrase: ``the flat''\n"
        "The length of the next response should be: short"
    ]


def test_render_middle_sections_are_seed_shuffled_but_stable():
    items = [
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(E, "persona", "i paint .", 1),
        DialogItem(A, "length_class", "short", 1),
    ]
    inst = _instance(items, RESPONSE_TARGET)
    baseline = render(inst, 0)
    assert render(inst, 0) == baseline
    orders = {tuple(l for l, _ in render(inst, seed).sections) for seed in range(40)}
    assert len(orders) > 1
    expected_multiset = sorted(l for l, _ in baseline.sections)
    for order in orders:
        assert sorted(order) == expected_multiset
        assert order[0] == SECTION_INSTRUCTION
        assert order[-1] == SECTION_HEADERS[R]


def test_render_target_header_for_action_target():
    target = TargetItem(A, "dialog_act", "inform")
    inst = _instance([DialogItem(S, "emotion", "surprise", 1)], target)
    ex = render(inst, 5)
    assert ex.input_text.endswith("Actions:")


def test_render_naive_fixed_order_inline_labels():
    items = [
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(A, "length_class", "short", 1),
    ]
    inst = _instance(items, RESPONSE_TARGET)
    naive = dataclasses.replace(inst, style="naive")
    for seed in (0, 1, 99):
        ex = render(naive, seed)
        assert "Emotion: surprise" in ex.input_text
        assert "Length: short" in ex.input_text
        assert ex.input_text == render(naive, 0).input_text  # naive ignores the seed
    lines = render(naive, 0).input_text.splitlines()
    assert lines[0].startswith("Instruction: ")
    assert lines[1] == SECTION_CONTEXT
    assert lines[-1] == "Response:"


def test_render_empty_context_keeps_bare_header():
    inst = _instance([DialogItem(A, "emotion", "surprise", 1)], RESPONSE_TARGET)
    bare = dataclasses.replace(inst, context=())
    ex = render(bare, 2)
    assert "Dialog Context:" in ex.input_text.splitlines()


def test_cot_transform_empty_shift_is_identity():
    inst = _instance([DialogItem(A, "emotion", "surprise", 1)], RESPONSE_TARGET)
    assert cot_transform(inst, []) is inst


def test_cot_transform_moves_items_to_output():
    items = [
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(A, "length_class", "short", 1),
    ]
    inst = _instance(items, RESPONSE_TARGET)
    shifted = cot_transform(inst, [items[1]])
    assert shifted.signature.canonical_string() == "ICS-R"
    assert shifted.grounding_items == (items[0],)
    assert shifted.cot_items == (items[1],)
    assert shifted.instruction == build_instruction(R, [S])
    ex = render(shifted, 4)
    assert ex.output_text == "short\nthe flat came furnished ."
    assert "length" not in ex.input_text


def test_cot_transform_orders_shift_canonically():
    items = [
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(A, "length_class", "short", 1),
        DialogItem(E, "persona", "i paint .", 1),
    ]
    inst = _instance(items, RESPONSE_TARGET)
    shifted = cot_transform(inst, [items[1], items[0], items[2]])
    assert [i.component for i in shifted.cot_items] == [S, E, A]
    assert shifted.signature.canonical_string() == "IC-R"
    assert render(shifted, 0).output_text == (
        "surprise\ni paint .\nshort\nthe flat came furnished ."
    )


def test_cot_transform_rejects_foreign_items():
    inst = _instance([DialogItem(S, "emotion", "surprise", 1)], RESPONSE_TARGET)
    with pytest.raises(ShiftNotSubset):
        cot_transform(inst, [DialogItem(A, "length_class", "short", 1)])


def test_apply_cot_modes():
    items = [
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(A, "length_class", "short", 1),
    ]
    inst = _instance(items, RESPONSE_TARGET)
    untouched = apply_cot([inst], "none", seed=0)
    assert untouched == [inst]
    shifted = apply_cot([inst], "random-1", seed=0)
    assert len(shifted[0].cot_items) == 1
    assert len(shifted[0].grounding_items) == 1
    assert apply_cot([inst], "random-1", seed=0) == shifted
    capped = apply_cot([inst], "random-5", seed=0)
    assert len(capped[0].cot_items) == 2
    with pytest.raises(ValueError):
        apply_cot([inst], "sometimes", seed=0)


def test_render_after_compose_names_all_components():
    bw = derive_task("beginswith_controlled_generation", _long_dialog(), 1, 0)
    persona = derive_task("persona_grounded_generation", _long_dialog(), 1, 0)
    composed = compose(bw, persona, load_rules())
    ex = render(composed, 9)
    assert "evidence, and action fields" in ex.input_text
    labels = [label for label, _ in ex.sections]
    assert "Evidence:" in labels and "Actions:" in labels


def _long_dialog():
    return Dialog(
        dialog_id="d9",
        dataset="hand",
        turns=(
            Turn("Speaker 1", "tell me about your weekend plans please ?"),
            Turn(
                "Speaker 2",
                "we plan to visit the gallery and then walk along the river .",
                (DialogItem(E, "persona", "i paint landscapes .", 1),),
            ),
        ),
    )


def test_render_corpus_collects_errors_and_keeps_going():
    good = _instance([DialogItem(S, "emotion", "surprise", 1)], RESPONSE_TARGET)
    bad = _instance(
        [DialogItem(S, "mystery_kind", "x", 1)], RESPONSE_TARGET, name="broken_task"
    )
    rendered, errors = render_corpus([bad, good], seed=0)
    assert [r.task_name for r in rendered] == ["hand_task"]
    assert len(errors) == 1
    assert errors[0]["task_name"] == "broken_task"
    assert errors[0]["error"].startswith("UnknownKind")
    fallback, errs = render_corpus([bad], seed=0, options=RenderOptions(generic_fallback=True))
    assert errs == [] and "The mystery kind is: x" in fallback[0].input_text


def test_render_corpus_deterministic():
    items = [
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(A, "length_class", "short", 1),
    ]
    insts = [_instance(items, RESPONSE_TARGET, name=f"t{i}") for i in range(4)]
    first, _ = render_corpus(insts, seed=11)
    second, _ = render_corpus(insts, seed=11)
    assert first == second
    assert all(r.to_record()["input"] for r in first)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_render_section_multiset_is_seed_invariant(seed):
    items = [
        DialogItem(S, "emotion", "surprise", 1),
        DialogItem(E, "knowledge", "flats exist .", 1),
        DialogItem(A, "length_class", "short", 1),
        DialogItem(A, "begins_with", "the flat", 1),
    ]
    inst = _instance(items, RESPONSE_TARGET)
    opts = RenderOptions(block_shuffle=False)
    baseline = sorted(render(inst, 0, opts).sections)
    assert sorted(render(inst, seed, opts).sections) == baseline
