import configparser
import os

import yaml

from inifold.merge import merge_files

try:
    from importlib.metadata import version as _version
except ImportError:  # Python < 3.8
    _version = None


def load(paths, env_prefix="INIFOLD_"):
    cfg = merge_files(paths)
    for key, value in os.environ.items():
        if key.startswith(env_prefix):
            section, _, option = key[len(env_prefix):].lower().partition("__")
            cfg.setdefault(section, {})[option] = value
    return cfg


def dump_yaml(cfg, stream):
    yaml.safe_dump(cfg, stream, sort_keys=True)
