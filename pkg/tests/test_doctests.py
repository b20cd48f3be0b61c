import doctest
import importlib

import pytest

MODULES = ("certificates", "cli", "dirichlet", "eigen", "graph", "jsonio", "limits", "operators",
           "potential", "reports")


@pytest.mark.parametrize("name", MODULES)
def test_module_examples(name):
    mod = importlib.import_module(f"pcrit.{name}")
    result = doctest.testmod(mod, optionflags=doctest.NORMALIZE_WHITESPACE)
    assert result.failed == 0
