# Copyright 2026 The tutorrag Authors
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

"""Python access to the tutorrag core: merge, chunk, local index, guardrail."""

import json

from . import _core
from ._core import TutorragError

__all__ = [
    "Index",
    "TutorragError",
    "chunk",
    "classification_metrics",
    "classify",
    "default_guardrail_toml",
    "embed_local",
    "filter_experiment",
    "merge",
    "validate_citations",
]


def classify(question, config_path=""):
    return json.loads(_core.classify(question, str(config_path)))


def default_guardrail_toml():
    return _core.default_guardrail_toml()


def filter_experiment(suite, config_path=""):
    """`suite` is the parsed suite JSON (dict with "questions" or a list)."""
    return json.loads(_core.filter_experiment(json.dumps(suite), str(config_path)))


def classification_metrics(tp, fp, fn, tn):
    return json.loads(_core.classification_metrics(tp, fp, fn, tn))


def merge(payloads, doc_id, title, pages):
    return json.loads(_core.merge([json.dumps(p) for p in payloads], doc_id, title, pages))


def chunk(document, max_tokens=400, overlap=50, respect_boundaries=True):
    return json.loads(_core.chunk(json.dumps(document), max_tokens, overlap, respect_boundaries))


def embed_local(text, dim=1024, model_id="local-trigram-v1"):
    return _core.embed_local(text, dim, model_id)


def validate_citations(text, context):
    """`context` is a list of (chunk_id, source_ref) in prompt order."""
    return json.loads(_core.validate_citations(text, list(context)))


class Index:
    """Index over chunks embedded with the local trigram model."""

    def __init__(self, native):
        self._native = native

    @classmethod
    def build(cls, chunks, dim=1024, mode="exact"):
        return cls(_core.Index.build_local(json.dumps(chunks), dim, mode))

    @classmethod
    def load(cls, path):
        return cls(_core.Index.load(str(path)))

    def save(self, path):
        self._native.save(str(path))

    def query(self, text, k=5, exact=False):
        return json.loads(self._native.query(text, k, exact))

    @property
    def dim(self):
        return self._native.dim

    @property
    def model_id(self):
        return self._native.model_id

    def __len__(self):
        return len(self._native)
