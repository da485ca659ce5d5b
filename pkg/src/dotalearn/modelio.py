"""Canonical JSON form of DOTA and DTMM models."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .models import Dota, Dtmm, Guard, MealyTransition, ModelError, Transition

Model = Union[Dota, Dtmm]


def model_to_dict(M: Model) -> dict:
    if isinstance(M, Dota):
        return {
            "type": "dota",
            "alphabet": list(M.alphabet),
            "locations": list(M.locations),
            "initial": M.initial,
            "accepting": [q for q in M.locations if q in M.accepting],
            "sink": M.sink,
            "transitions": [
                {"source": t.source, "action": t.action, "guard": str(t.guard), "reset": t.reset, "target": t.target}
                for t in M.transitions
            ],
        }
    return {
        "type": "dtmm",
        "alphabet": list(M.alphabet),
        "outputs": list(M.outputs),
        "locations": list(M.locations),
        "initial": M.initial,
        "sink": M.sink,
        "transitions": [
            {
                "source": t.source,
                "input": t.input,
                "output": t.output,
                "guard": str(t.guard),
                "reset": t.reset,
                "target": t.target,
            }
            for t in M.transitions
        ],
    }


def model_from_dict(data: dict) -> Model:
    kind = data.get("type")
    try:
        if kind == "dota":
            trs = [
                Transition(t["source"], t["action"], Guard.parse(t["guard"]), bool(t["reset"]), t["target"])
                for t in data["transitions"]
            ]
            return Dota(data["alphabet"], data["locations"], data["initial"], data.get("accepting", []), trs, data.get("sink"))
        if kind == "dtmm":
            trs = [
                MealyTransition(t["source"], t["input"], t["output"], Guard.parse(t["guard"]), bool(t["reset"]), t["target"])
                for t in data["transitions"]
            ]
            return Dtmm(data["alphabet"], data["locations"], data["initial"], data.get("outputs", []), trs, data.get("sink"))
    except KeyError as exc:
        raise ModelError(f"missing field {exc}") from None
    raise ModelError(f"unknown model type {kind!r}")


def dumps_model(M: Model) -> str:
    return json.dumps(model_to_dict(M), indent=2)


def loads_model(text: str) -> Model:
    return model_from_dict(json.loads(text))


def load_model(path: Union[str, Path]) -> Model:
    return loads_model(Path(path).read_text())


def save_model(M: Model, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_model(M) + "\n")
