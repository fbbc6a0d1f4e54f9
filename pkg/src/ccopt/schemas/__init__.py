"""JSON schemas of the command-line reports and the problem document."""
import json
from importlib import resources

NAMES = ("solve", "certify", "second_order", "oracle", "check_derivatives", "problem")


def load_schema(name):
    if name not in NAMES:
        raise KeyError(name)
    return json.loads(resources.files(__name__).joinpath(f"{name}.json").read_text())
