import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kpsketch import builtin_essg, ingest_vertical

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def table2_index():
    return ingest_vertical((DATA / "table2.vert").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def regressions_index():
    return ingest_vertical((DATA / "fp_regressions.vert").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def coverage_index():
    return ingest_vertical((DATA / "coverage.vert").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def essg_v1():
    return builtin_essg("v1")


@pytest.fixture(scope="session")
def essg_v2():
    return builtin_essg("v2")


def annotation_pairs(annotations):
    """(rule_id, head, collocate) triples as a set, for exact-set asserts."""
    return {(a.rule_id, a.head, a.collocate) for a in annotations}
