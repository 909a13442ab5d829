"""Decay profiles E_a(-t^a): algebraic tails for a < 1, exponential for a = 1."""
from math import gamma

import numpy as np

from mlstab import mittag_leffler

orders = (0.35, 0.61, 0.95, 1.0)
print(f"{'t':>8}" + "".join(f"{'a=' + str(a):>13}" for a in orders))
for t in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0):
    print(f"{t:>8g}" + "".join(f"{mittag_leffler(-t**a, a):>13.4e}" for a in orders))
# for a < 1 the tail behaves like t^-a / Gamma(1 - a)
print("t=1000, a=0.61: tail estimate", 1000**-0.61 / gamma(0.39))
