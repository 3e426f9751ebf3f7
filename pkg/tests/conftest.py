import json
from importlib import resources

import numpy as np
import pytest

from npaclab.colorimetry import d50_2deg
from npaclab.data.make_presses import demo_8ink, demo_cmyk
from npaclab.press import synth_np_table

SCHEMA_NAMES = ("common_defs.json", "spot_session.json", "spot_final.json",
                "gamut_mesh.json", "health.json")


def validate_schema(doc, schema_name):
    """Validate a response document against a shipped JSON Schema file."""
    import jsonschema
    from referencing import Registry, Resource
    from referencing.jsonschema import DRAFT202012

    schemas = resources.files("npaclab.data").joinpath("schemas")
    registry = Registry()
    for name in SCHEMA_NAMES:
        body = json.loads(schemas.joinpath(name).read_text())
        registry = registry.with_resource(
            body["$id"], Resource.from_contents(body, default_specification=DRAFT202012))
    schema = json.loads(schemas.joinpath(schema_name).read_text())
    jsonschema.Draft202012Validator(schema, registry=registry).validate(doc)


@pytest.fixture(scope="session")
def vc():
    return d50_2deg()


@pytest.fixture(scope="session")
def cmyk_press():
    return demo_cmyk()


@pytest.fixture(scope="session")
def eight_ink_press():
    return demo_8ink()


@pytest.fixture(scope="session")
def cmyk_table(cmyk_press):
    return synth_np_table(cmyk_press)


@pytest.fixture(scope="session")
def eight_ink_table(eight_ink_press):
    return synth_np_table(eight_ink_press)


def random_npac(rng, table, max_entries=6):
    """Random sparse convex NPac over a table's primaries."""
    from npaclab.neugebauer import NPac

    m = rng.integers(1, max_entries + 1)
    ids = rng.choice(table.ids, size=m, replace=False)
    w = rng.dirichlet(np.ones(m))
    return NPac(tuple((int(i), float(x)) for i, x in zip(ids, w)))
