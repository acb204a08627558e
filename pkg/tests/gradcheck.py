"""Central finite-difference helpers shared by the gradient tests."""

import numpy as np

STEP = 1e-5


def numerical_gradients(loss, params, step=STEP):
    """Central differences of ``loss(params)``, perturbing ``params`` in place."""
    out = []
    for p in params:
        flat = p.reshape(-1)
        g = np.zeros(flat.size)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up = loss(params)
            flat[i] = old - step
            down = loss(params)
            flat[i] = old
            g[i] = (up - down) / (2 * step)
        out.append(g)
    return out


def max_relative_error(loss, params, grads, step=STEP):
    """Largest per-component relative error between ``grads`` and central differences.

    Relative error is ``|a - n| / max(|a| + |n|, 1e-8)`` per component.
    """
    worst = 0.0
    for g, num in zip(grads, numerical_gradients(loss, params, step)):
        a = np.asarray(g, dtype=np.float64).reshape(-1)
        err = np.abs(a - num) / np.maximum(np.abs(a) + np.abs(num), 1e-8)
        worst = max(worst, float(err.max(initial=0.0)))
    return worst


def block_relative_errors(loss, params, grads, step=STEP):
    """Per parameter block ``||a - n|| / max(||a|| + ||n||, 1e-8)``, plus the per-component maximum."""
    blocks, comp = [], 0.0
    for g, num in zip(grads, numerical_gradients(loss, params, step)):
        a = np.asarray(g, dtype=np.float64).reshape(-1)
        blocks.append(float(np.linalg.norm(a - num) / max(np.linalg.norm(a) + np.linalg.norm(num), 1e-8)))
        comp = max(comp, float((np.abs(a - num) / np.maximum(np.abs(a) + np.abs(num), 1e-8)).max(initial=0.0)))
    return blocks, comp
