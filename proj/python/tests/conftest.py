import os
import pathlib

import pytest


@pytest.fixture(scope="session")
def fixtures():
    return pathlib.Path(os.environ.get("CORPUSFLOW_FIXTURES", pathlib.Path(__file__).parents[2] / "tests" / "fixtures"))
