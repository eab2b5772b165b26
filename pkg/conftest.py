import os
import sys

import pytest

ROOT_DIR = os.path.dirname(os.path.abspath(__file__))
if ROOT_DIR not in sys.path:
    sys.path.insert(0, ROOT_DIR)

from tool.LLM.schema import JudgeBackendSpec  # noqa: E402


@pytest.fixture(autouse=True)
def no_tracing(monkeypatch):
    # tests never talk to LangSmith
    monkeypatch.setenv("LANGSMITH_TRACING", "false")
    monkeypatch.setenv("LANGCHAIN_TRACING_V2", "false")


@pytest.fixture
def mock_spec():
    return JudgeBackendSpec(kind="mock", seed=7)
