import pytest

from addgrowth import specfile


@pytest.fixture(scope="session")
def builtin():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = specfile.load_builtin(name)
        return cache[name]

    return get
