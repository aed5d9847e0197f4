import pytest

# oracle suites run before anything that leans on them
ORDER = ["test_oracles", "test_mfunc", "test_families", "test_averaging", "test_expsum",
         "test_pretentious", "test_spectral", "test_cli", "test_acceptance"]


def pytest_collection_modifyitems(config, items):
    def rank(item):
        name = item.module.__name__.rsplit(".", 1)[-1]
        return ORDER.index(name) if name in ORDER else len(ORDER)

    items.sort(key=rank)
