"""Prompt templates used across the pipeline.

The stub backends key off these exact strings, so every template lives here
rather than inline at its call site.
"""

from __future__ import annotations

import json
import re

from .util import canonical_json, sha256_hex

ENTITY_RECOGNIZER_PROMPT = (
    'What "active" scene entities can you identify from the video? An entity '
    'refers to an object, and "active" scene entities are scene objects that '
    "have any dynamic behaviors, such as actions, interactions with others, or "
    'movements. Please compile a list of clearly visible "active" scene '
    "entities from the video. Use entity appearance in concise description to "
    'distinguish one "active" scene entity from another if possible.'
)

PRESENCE_QUESTION = "Is there a {referring}? Answer 'Yes' or 'No'."

BEHAVIOR_QUESTION = (
    "What clearly happens to the {referring}? Describe only what is visibly "
    "happening to the {referring}, without inference or assumptions."
)

REFERRER_PROMPT = "Please detect {referring} in this image. Answer the question with object indexes."

REGION_PREFIX = "Please answer the following question about the <region>. "

PRONOUN_CHOICES = ("she", "he", "it", "they", "this person", "this animal", "this object")

YESNO_QUESTION = (
    "Does the following description accurately reflect what happens in the "
    "video between {start_time} and {end_time}? Description: {description}. "
    "Respond with 'Yes' or 'No' only."
)

REPAIR_MARKER = "Previous reply was invalid."

_FENCE_RE = re.compile(r"```json\n(.*?)\n```", re.DOTALL)


def parser_prompt(paragraph: str, repair: bool = False) -> str:
    head = (
        "Extract three structured lists from the entity description below. "
        "Respond with a JSON object containing exactly these equal-length "
        'arrays: "referrings" (full referring expressions such as "girl in a '
        'white dress"), "nouns" (their head-noun categories such as "girl"), '
        'and "generalized" (broader categories such as "person" for "girl" or '
        '"bird" for "parrot"). No other text.\n\n'
    )
    if repair:
        head = REPAIR_MARKER + " Emit only the JSON object with the three equal-length arrays.\n\n" + head
    return head + "Description:\n" + paragraph


def qa_generation_prompt(payload: dict, examples: list[dict], repair: bool = False) -> str:
    head = (
        "You are generating grounded question-answer pairs for video "
        "instruction tuning from a structured transcript. Follow the task "
        "definitions below and respond with a JSON array only.\n\n"
        "Task definitions:\n"
        "  7: describe what happened generally or to a specific entity during "
        "a specific time range; the question must quote the HH:MM:SS.xxx range.\n"
        "  8: same but over a coarse range (throughout the video, beginning, middle, or end).\n"
        "  9: ask when a behavior occurs; the answer is a coarse range.\n"
        "  10: describe an entity's behavior before/during/after another event.\n"
        "  11: identify the entity involved before/during/after another event.\n\n"
        "Each array item must be an object with keys: task_type, format "
        '("open_ended" or "multiple_choice"), question, answer, choices (array '
        "or null), correct_index (integer or null), entity_ids (array of "
        "integers), time_ref (object with kind exact_range/coarse_phase, or "
        "null).\n\n"
    )
    if repair:
        head = REPAIR_MARKER + " Emit only the JSON array described below.\n\n" + head
    example_block = "Examples:\n" + json.dumps(examples, ensure_ascii=False, indent=2) + "\n\n"
    return (
        head
        + example_block
        + "Video transcript:\n```json\n"
        + canonical_json(payload, indent=2)
        + "\n```"
    )


def rewrite_prompt(question: str, referring: str, generalized: str, repair: bool = False) -> str:
    head = (
        "Rewrite the question so it no longer names the target entity "
        "directly. Replace the entity's referring expression with a pronoun "
        "or generic term chosen from this list, inflected to fit the grammar: "
        + ", ".join(PRONOUN_CHOICES)
        + ". Keep every timestamp and all other wording unchanged. Respond "
        "with the rewritten question only.\n\n"
    )
    if repair:
        head = REPAIR_MARKER + " The referring expression must not appear in the rewrite.\n\n" + head
    payload = {"question": question, "referring": referring, "generalized": generalized}
    return head + "```json\n" + canonical_json(payload, indent=2) + "\n```"


def extract_fenced_json(prompt: str):
    """Return the last fenced JSON block in a prompt, parsed, or None."""
    matches = _FENCE_RE.findall(prompt)
    if not matches:
        return None
    try:
        return json.loads(matches[-1])
    except json.JSONDecodeError:
        return None


def parse_presence_question(prompt: str) -> str | None:
    prefix, suffix = "Is there a ", "? Answer 'Yes' or 'No'."
    if prompt.startswith(prefix) and prompt.endswith(suffix):
        return prompt[len(prefix):-len(suffix)]
    return None


def parse_behavior_question(prompt: str) -> str | None:
    prefix = "What clearly happens to the "
    if prompt.startswith(prefix) and "? Describe only" in prompt:
        return prompt[len(prefix):prompt.index("? Describe only")]
    return None


def prompt_digest(prompt: str) -> str:
    return sha256_hex(prompt)[:12]
