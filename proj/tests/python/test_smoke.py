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

import itertools
import math
import os
import pathlib
import random

import pytest

import suin

ROOT = pathlib.Path(os.environ.get("SUIN_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
TINY = ROOT / "configs" / "tiny.json"


def pairwise_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    good = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return good / (len(pos) * len(neg))


def test_auc_and_logloss():
    rng = random.Random(3)
    for _ in range(20):
        scores = [rng.randint(0, 5) / 5 for _ in range(40)]
        labels = [i % 2 for i in range(40)]
        rng.shuffle(labels)
        assert suin.auc(scores, labels) == pytest.approx(pairwise_auc(scores, labels), abs=1e-12)
    assert suin.logloss([0.5], [1.0]) == pytest.approx(math.log(2), abs=1e-12)
    with pytest.raises(suin.UndefinedMetricError):
        suin.auc([0.1, 0.2], [1.0, 1.0])


def test_similarity_measures():
    assert suin.similarity("cosine", [1, 0], [0, 1]) == 0.0
    assert suin.similarity("inner_product", [1, 2], [3, 4]) == 11.0
    assert suin.similarity("euclidean", [0, 0], [3, 4]) == pytest.approx(-5.0)
    assert suin.jaccard_similarity([1, 2, 3], [2, 3, 4]) == pytest.approx(0.5)
    with pytest.raises(suin.UndefinedSimilarityError):
        suin.similarity("cosine", [0, 0], [1, 1])


def test_retrieval_ordering_and_self_exclusion():
    users = [5, 3, 9, 1]
    emb = [[1, 0], [1, 0], [0, 1], [1, 1]]
    got = suin.retrieve_topk(users, emb, query_user=5, query_embedding=[1, 0], k=3)
    # Tie at cosine 1 is impossible here since user 5 is the query; 3 is next.
    assert [u for u, _ in got] == [3, 1, 9]
    assert got[0][1] == pytest.approx(1.0)
    assert suin.retrieve_topk(users, emb, query_user=7, query_embedding=[1, 0], k=2) == \
        [(3, pytest.approx(1.0)), (5, pytest.approx(1.0))]


def test_augment_utpe_layout():
    aug = suin.augment(1, [11, 12], [(2, 0.9)], {2: [21, 22, 23]}, seq_len=3, top_k=1)
    assert aug["items"] == [21, 22, 23, 0, 11, 12]
    assert aug["position_ids"] == [5, 4, 3, 2, 1, 0]
    assert aug["slot"] == [1, 1, 1, 0, 0, 0]
    assert aug["mask"] == [True, True, True, False, True, True]
    assert suin.position_table_rows(3, 1) == 6
    tpe = suin.augment(1, [11], [(2, 0.9)], {2: [21, 22, 23]}, seq_len=3, top_k=1, scheme="tpe")
    assert any(p // 3 != s for p, s, m in zip(tpe["position_ids"], tpe["slot"], tpe["mask"]) if m)


def test_config_round_trip_and_errors():
    cfg = suin.load_config(TINY)
    assert cfg["model"]["seq_len"] == 4
    assert suin.resolve_config(cfg) == cfg
    assert suin.default_config()["train"]["patience"] == 1
    with pytest.raises(suin.ConfigError):
        suin.resolve_config({"modle": {}})


def test_in_memory_run_is_deterministic():
    cfg = suin.load_config(TINY)
    a = suin.run(cfg)
    b = suin.run(cfg)
    assert 0.0 <= a["test_auc"] <= 1.0
    assert a["test_auc"] == b["test_auc"]
    assert a["best_epoch"] >= 1
    assert len(a["log"]) >= a["best_epoch"]


def test_stages_write_artifacts(tmp_path):
    cfg = suin.load_config(TINY)
    suin.run_stage("run", cfg, tmp_path)
    assert (tmp_path / "neighbors.tsv").exists()
    assert (tmp_path / "eval_test_none.csv").read_text().startswith("group,count,auc,logloss\nall,")
    suin.run_stage("evaluate", cfg, tmp_path, grouping="seq_length")
    assert (tmp_path / "eval_test_seq_length.csv").exists()
    with pytest.raises(suin.ConfigError):
        suin.run_stage("bogus", cfg, tmp_path)


def test_missing_upstream_stage(tmp_path):
    with pytest.raises(suin.IoError, match="suin generate"):
        suin.run_stage("train", suin.load_config(TINY), tmp_path)
