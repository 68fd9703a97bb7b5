import json
import os
from fractions import Fraction

_HERE = os.path.dirname(__file__)

with open(os.path.join(_HERE, "units.json"), encoding="utf-8") as fh:
    FACTORS = {k: Fraction(v) for k, v in json.load(fh).items()}


def convert(value, src, dst):
    return Fraction(value) * FACTORS[src] / FACTORS[dst]
