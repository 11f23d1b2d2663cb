# Copyright 2026 The SBC Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Stochastic Boolean circuits: training, compilation and diagnostics."""

import json

from . import _sbc
from ._sbc import (
    ExprParseError,
    binarize,
    bnr_eps as _bnr_eps,
    bnr_exact as _bnr_exact,
    gate_eval,
    gate_name,
    relu_bnr_failure_trial,
)

__all__ = [
    "ExprParseError",
    "binarize",
    "bnr_eps",
    "bnr_exact",
    "cli",
    "compile_table",
    "expr_tokens",
    "formula_table",
    "gate_eval",
    "gate_name",
    "generate_dataset",
    "render",
    "relu_bnr_failure_trial",
    "sigma16",
    "table_hex",
    "train_mlp",
    "train_sbc",
]


def sigma16(mode, a, b, bandwidth=0.1, radius=0.9):
    """All 16 gate interpolants at (a, b)."""
    return _sbc.sigma16(mode, a, b, bandwidth, radius)


def render(text):
    """Parses a formula and renders it in canonical infix form."""
    return _sbc.parse_render(text)


def expr_tokens(text):
    return _sbc.expr_tokens(text)


def formula_table(text, bits):
    """Truth table of a formula over `bits` inputs, x1 most significant."""
    return _sbc.formula_table(text, bits)


def table_hex(outputs):
    return _sbc.table_hex(list(outputs))


def bnr_exact(trace, decimals=6):
    return _bnr_exact(list(trace), decimals)


def bnr_eps(trace, eps=1e-3):
    return _bnr_eps(list(trace), eps)


def generate_dataset(**gen_config):
    """Instances as dicts; keyword arguments are generator knobs."""
    return json.loads(_sbc.generate_json(json.dumps(gen_config)))


def compile_table(outputs, delta=0.05, samples=0, seed=0):
    return json.loads(_sbc.compile_json(list(outputs), delta, samples, seed))


def train_sbc(outputs, stack=None, train=None, **shape):
    """Trains a stack on a truth table; `shape` may set heads and depth."""
    stack = dict(stack or {}, **shape)
    return json.loads(_sbc.train_sbc_json(list(outputs), json.dumps(stack), json.dumps(train or {})))


def train_mlp(outputs, width, depth, train=None):
    return json.loads(_sbc.train_mlp_json(list(outputs), width, depth, json.dumps(train or {})))


def cli(*args):
    """Runs the command-line tool in process; returns (code, stdout, stderr)."""
    return _sbc.cli([str(a) for a in args])
