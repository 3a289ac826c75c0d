import os

import pytest

LARGE = os.environ.get("POLARGRASS_LARGE") == "1"


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    old = os.environ.get("POLARGRASS_CACHE")
    os.environ["POLARGRASS_CACHE"] = str(tmp_path_factory.mktemp("cache"))
    yield
    if old is None:
        os.environ.pop("POLARGRASS_CACHE", None)
    else:
        os.environ["POLARGRASS_CACHE"] = old


def pytest_collection_modifyitems(config, items):
    if LARGE:
        return
    skip = pytest.mark.skip(reason="large instance; set POLARGRASS_LARGE=1 to run")
    for item in items:
        if "large" in item.keywords:
            item.add_marker(skip)
