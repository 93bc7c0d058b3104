import numpy as np


def finite_difference_gradient(loss_fn, array, indices, eps=1e-6):
    """Central finite differences of ``loss_fn()`` w.r.t. ``array[idx]``."""
    grads = {}
    for idx in indices:
        orig = array[idx]
        array[idx] = orig + eps
        up = loss_fn()
        array[idx] = orig - eps
        down = loss_fn()
        array[idx] = orig
        grads[idx] = (up - down) / (2 * eps)
    return grads
