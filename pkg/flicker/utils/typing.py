#!/usr/bin/env python3
"""Typing utilities"""

from pathlib import Path
from typing import Sequence, TypeVar, Union

import numpy as np
import pandas as pd

ArrayLike = TypeVar("ArrayLike", np.ndarray, pd.Series, pd.DataFrame, Sequence)
PathLike = TypeVar("PathLike", str, Path)
State = Union[int, str]
"""A state given either by its index or by its label"""
