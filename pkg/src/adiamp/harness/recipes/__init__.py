"""Experiment recipes; importing this package registers them."""
from . import classify, metamaterial, twolevel  # noqa: F401
