"""Certified computations around linear independence of q-series values."""

from .errors import *  # noqa: F401,F403
from .numerics import ComplexBall, RealBall
from .numberfield import FieldElement, NumberField, field_create, rational_field
from .qseries import SeriesSpec, eval_series

__version__ = "0.1.0"
