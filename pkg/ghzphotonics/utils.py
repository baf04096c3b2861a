import os
import json
import yaml
import logging
import numpy as np

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

SIGNIFICANT_DIGITS = 12
CONFIGURATION_DIRECTORY = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configurations")


def get_config(file_name):
    """
    Load a run configuration. A path relative to the working directory takes
    precedence over the named configurations shipped with the package.
    """
    file_path = os.path.join(os.getcwd(), file_name)
    if not os.path.isfile(file_path):  # check configurations folder
        file_path = os.path.join(CONFIGURATION_DIRECTORY, file_name.lower() + ".yaml")
    if not os.path.isfile(file_path):
        raise ValueError("no configuration named '{}'".format(file_name))
    with open(file_path, "r") as f:
        cfg = yaml.load(f, Loader=yaml.SafeLoader)
    log.debug("Loaded configuration from %s", file_path)
    return cfg


def round_significant(value, digits=SIGNIFICANT_DIGITS):
    """Recursively round every float in a JSON-like structure."""
    if isinstance(value, dict):
        return {key: round_significant(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_significant(item, digits) for item in value]
    if isinstance(value, np.ndarray):
        return round_significant(value.tolist(), digits)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not np.isfinite(value):
            return None
        return float("{:.{}g}".format(value, digits))
    return value


def dump_json(dictionary, file_path=None):
    """Serialize with 12 significant digits; write to file_path if given."""
    text = json.dumps(round_significant(dictionary), indent=2) + "\n"
    if file_path is not None:
        with open(file_path, "w") as f:
            f.write(text)
        log.info("Saving data to %s", file_path)
    return text


def load_json(file_path):
    with open(file_path, "r") as f:
        return json.load(f)
