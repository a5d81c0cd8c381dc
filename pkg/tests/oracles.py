"""Slow reference implementations the fast paths are checked against."""

import cmath
import math


def brute_dft(v):
    n = len(v)
    return [sum(v[j] * cmath.exp(-2j * math.pi * k * j / n) for j in range(n)) for k in range(n)]


def brute_power(v):
    m = sum(v) / len(v)
    X = brute_dft([x - m for x in v])
    return [abs(X[k]) ** 2 / len(v) for k in range(len(v) // 2 + 1)]
