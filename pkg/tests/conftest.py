import json
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles():
    """Frozen reference values; see tests/oracles/make_oracles.py."""
    with open(DATA / "oracles.json") as fh:
        return json.load(fh)


def as_complex(pair):
    """Oracle numbers are stored as [re, im] pairs."""
    return complex(pair[0], pair[1])
