from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CORPUS_PATH = (
    Path(__file__).parent.parent / "src" / "moltrip" / "data" / "corpus_200.smi"
)


@pytest.fixture(scope="session")
def corpus() -> list[str]:
    lines = [l.strip() for l in CORPUS_PATH.read_text().splitlines() if l.strip()]
    assert len(lines) == 200
    return lines
