import numpy as np


def e(n, i):
    """1-based basis vector of ℝⁿ."""
    v = np.zeros(n)
    v[i - 1] = 1.0
    return v


def random_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def third_derivative(f, h=1e-2):
    """f'''(0) from a 6-point stencil, fourth order."""
    return (f(-3 * h) - 8 * f(-2 * h) + 13 * f(-h) - 13 * f(h) + 8 * f(2 * h) - f(3 * h)) / (8 * h**3)
