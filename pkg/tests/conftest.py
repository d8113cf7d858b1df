import os
from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

settings.register_profile("heightlab", deadline=None, max_examples=60)
settings.register_profile("thorough", deadline=None, max_examples=600)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "heightlab"))


def rationals(bound=10**6, nonzero=False):
    nums = st.integers(-bound, bound)
    if nonzero:
        nums = nums.filter(bool)
    return st.builds(Fraction, nums, st.integers(1, bound))


@pytest.fixture
def F():
    return Fraction


def _schema_registry():
    import json
    from importlib.resources import files

    from referencing import Registry, Resource

    docs = {}
    for entry in files("heightlab.schemas").iterdir():
        if entry.name.endswith(".json"):
            doc = json.loads(entry.read_text(encoding="utf-8"))
            docs[doc["$id"]] = doc
    registry = Registry().with_resources((k, Resource.from_contents(v)) for k, v in docs.items())
    return registry, docs


@pytest.fixture(scope="session")
def validate():
    """validate(document, "lemma_report") raises on a schema violation."""
    from jsonschema import Draft202012Validator

    registry, docs = _schema_registry()

    def check(doc, name):
        schema = docs[f"heightlab/{name}.v1.json"]
        Draft202012Validator(schema, registry=registry).validate(doc)

    return check


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_line(request):
    """acceptance_line(n, title, ok, detail) records one criterion outcome for the summary."""

    def record(n, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title}" + (f"  ({detail})" if detail else "")
        request.config.stash[_ACCEPTANCE].append((n, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
