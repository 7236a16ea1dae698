import numpy as np
import pandas as pd


def mean(values):
    return sum(values) / len(values)
