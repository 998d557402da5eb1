"""JSON game documents: schema, parsing and serialization"""
import json
from pathlib import Path
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from games.spec import Belief, GameSpec
from utils.errors import GameFileError
from utils.reports import write_json


class TransitionEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    source: str = Field(alias="from")
    a1: str
    a2: str
    to: str
    signal: str
    prob: float = Field(ge=0.0)


class RewardEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    state: str
    a1: str
    a2: str
    value: float


class BeliefEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    state: str
    prob: float = Field(ge=0.0)


class GameDocument(BaseModel):
    """On-disk layout of a hidden stochastic game"""

    model_config = ConfigDict(extra="forbid")

    name: str = "game"
    states: List[str] = Field(min_length=1)
    actions1: List[str] = Field(min_length=1)
    actions2: List[str] = Field(min_length=1)
    signals: List[str] = Field(min_length=1)
    transitions: List[TransitionEntry]
    rewards: List[RewardEntry] = Field(default_factory=list)
    initial_belief: List[BeliefEntry] = Field(min_length=1)


def _lookup(labels, value, location):
    try:
        return labels.index(value)
    except ValueError:
        raise GameFileError(f"unknown label {value!r}", location)


def document_to_game(doc):
    """
    Convert a validated document into a GameSpec
    Args:
        doc: GameDocument
    Returns:
        GameSpec
    Raises:
        GameFileError on unknown labels or a (state, a1, a2) triple with no transitions
    """
    states, a1s, a2s, sigs = doc.states, doc.actions1, doc.actions2, doc.signals
    k, i, j, s = len(states), len(a1s), len(a2s), len(sigs)
    kernel = np.zeros((k, i, j, k, s))
    seen = np.zeros((k, i, j), dtype=bool)
    for n, entry in enumerate(doc.transitions):
        loc = f"transitions[{n}]"
        src = _lookup(states, entry.source, f"{loc}.from")
        x = _lookup(a1s, entry.a1, f"{loc}.a1")
        y = _lookup(a2s, entry.a2, f"{loc}.a2")
        dst = _lookup(states, entry.to, f"{loc}.to")
        sig = _lookup(sigs, entry.signal, f"{loc}.signal")
        kernel[src, x, y, dst, sig] += entry.prob
        seen[src, x, y] = True
    missing = np.argwhere(~seen)
    if missing.size:
        src, x, y = missing[0]
        raise GameFileError(
            f"missing transition row for ({states[src]}, {a1s[x]}, {a2s[y]})", "transitions",
        )
    reward = np.zeros((k, i, j))
    for n, entry in enumerate(doc.rewards):
        loc = f"rewards[{n}]"
        reward[
            _lookup(states, entry.state, f"{loc}.state"),
            _lookup(a1s, entry.a1, f"{loc}.a1"),
            _lookup(a2s, entry.a2, f"{loc}.a2"),
        ] = entry.value
    belief = np.zeros(k)
    for n, entry in enumerate(doc.initial_belief):
        belief[_lookup(states, entry.state, f"initial_belief[{n}].state")] += entry.prob
    try:
        return GameSpec(tuple(states), tuple(a1s), tuple(a2s), tuple(sigs),
                        kernel, reward, Belief(belief), name=doc.name)
    except ValueError as e:
        raise GameFileError(str(e), "document")


def parse_game(text):
    """Parse JSON text; errors carry line/column or field locations"""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise GameFileError(e.msg, f"line {e.lineno}, column {e.colno}")
    try:
        doc = GameDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "document"
        raise GameFileError(first["msg"], location)
    return document_to_game(doc)


def load_game(path):
    """Read a game file from disk"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise GameFileError(f"cannot read file: {str(e)}", str(path))
    return parse_game(text)


def game_to_document(spec):
    """Serialize a GameSpec; zero-probability transitions and zero rewards are omitted"""
    transitions = [
        {"from": spec.states[k], "a1": spec.actions1[i], "a2": spec.actions2[j],
         "to": spec.states[k2], "signal": spec.signals[s], "prob": float(spec.kernel[k, i, j, k2, s])}
        for k, i, j, k2, s in np.argwhere(spec.kernel > 0.0)
    ]
    rewards = [
        {"state": spec.states[k], "a1": spec.actions1[i], "a2": spec.actions2[j],
         "value": float(spec.reward[k, i, j])}
        for k, i, j in np.argwhere(spec.reward != 0.0)
    ]
    initial = [
        {"state": spec.states[k], "prob": float(p)}
        for k, p in enumerate(spec.initial_belief.probs) if p > 0.0
    ]
    return {
        "name": spec.name,
        "states": list(spec.states),
        "actions1": list(spec.actions1),
        "actions2": list(spec.actions2),
        "signals": list(spec.signals),
        "transitions": transitions,
        "rewards": rewards,
        "initial_belief": initial,
    }


def dump_game(spec, path=None):
    """Return the JSON text of a game, also writing it when a path is given"""
    document = game_to_document(spec)
    if path is not None:
        write_json(path, document)
    return json.dumps(document, indent=2)
