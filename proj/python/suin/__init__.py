# Copyright 2026 The SUIN Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the SUIN C++ core.

Configs are plain dicts with the same keys as the JSON config files.
"""

import json
import os

from . import _suin
from ._suin import (
    ConfigError,
    ConsistencyError,
    DimensionError,
    DivergenceError,
    EmptyAttentionError,
    EmptyHistoryError,
    Error,
    GraphError,
    IoError,
    LeakageError,
    NumericDomainError,
    SuinIndexError,
    UndefinedMetricError,
    UndefinedSimilarityError,
    augment,
    auc,
    jaccard_similarity,
    logloss,
    position_table_rows,
    retrieve_topk,
    similarity,
    sweep_names,
)

STAGES = ("generate", "split", "pretrain", "build-pool", "retrieve", "train",
          "evaluate", "inspect", "ablate", "run")


def default_config():
    return json.loads(_suin.resolve_config("{}"))


def load_config(path):
    return json.loads(_suin.load_config_text(os.fspath(path)))


def resolve_config(config):
    """Validates a (partial) config and fills in every default."""
    return json.loads(_suin.resolve_config(json.dumps(config)))


def run_stage(stage, config, out_dir=None, **options):
    """Runs one CLI stage. Options: sweep, grouping, split, user, threads."""
    config = dict(config)
    if out_dir is not None:
        config["out_dir"] = os.fspath(out_dir)
    _suin.run_stage(stage, json.dumps(config), **options)


def run(config, threads=1):
    """Whole pipeline in memory; returns test metrics and the training log."""
    return _suin.run_in_memory(json.dumps(config), threads)
