"""Python front end for the masked-diffusion decoding engine."""

import json

from ._core import (
    EngineError,
    Predictor,
    SchedulerConfig,
    ngram_predictor,
    read_trace_header,
    replay_predictor,
    table_predictor,
    uniform_schedule,
    valid_token_count,
    verify_report_csv,
)
from . import _core

__all__ = [
    "EngineError",
    "Predictor",
    "SchedulerConfig",
    "check_lemma",
    "compare",
    "decode_freedave",
    "decode_static",
    "decode_threshold",
    "ngram_predictor",
    "read_trace_header",
    "replay_predictor",
    "table_predictor",
    "uniform_schedule",
    "valid_token_count",
    "verify_report_csv",
]


def decode_static(predictor, scheduler, length, steps=None, seed=0):
    return json.loads(_core.decode_static(predictor, scheduler, length, steps or length, seed))


def decode_threshold(predictor, scheduler, length, steps=None, seed=0):
    return json.loads(_core.decode_threshold(predictor, scheduler, length, steps or length, seed))


def decode_freedave(predictor, scheduler, length, d, steps=None, seed=0):
    return json.loads(_core.decode_freedave(predictor, scheduler, length, steps or length, d, seed))


def check_lemma(predictor, scheduler, length, steps=None, seed=0, cap=14):
    return json.loads(_core.check_lemma(predictor, scheduler, length, steps or length, seed, cap))


def compare(config_path, as_json=False):
    out = _core.compare(str(config_path), as_json)
    return json.loads(out) if as_json else out
