from pathlib import Path

import pytest

from inputs.documents import read_document

ROOT = Path(__file__).resolve().parent.parent


def fixture_path(name):
    return ROOT / "fixtures" / "{}.json".format(name)


@pytest.fixture
def load():
    def _load(name):
        return read_document(str(fixture_path(name)))
    return _load
