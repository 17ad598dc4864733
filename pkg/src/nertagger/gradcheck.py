"""Central finite-difference gradient checking."""
import numpy as np


def numerical_grad(f, param, eps=1e-5):
    """Central differences of the scalar ``f()`` w.r.t. every entry of ``param``.

    ``param.data`` is perturbed in place and restored afterwards.
    """
    flat = param.data.reshape(-1)
    out = np.zeros(flat.shape)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(f().data)
        flat[i] = orig - eps
        fm = float(f().data)
        flat[i] = orig
        out[i] = (fp - fm) / (2 * eps)
    return out.reshape(param.shape)


def relative_error(analytic, numeric, floor=1e-8):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps entries whose true gradient is (near) zero from turning
    finite-difference round-off into huge ratios.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def check_gradients(loss_fn, params, eps=1e-5):
    """Compare autograd and finite-difference gradients for ``params``.

    Parameters
    ----------
    loss_fn : callable
        Builds and returns a fresh scalar Tensor on each call.  Must be
        deterministic (reseed any sampling inside it).
    params : sequence of (name, Tensor)

    Returns
    -------
    dict
        ``name -> (analytic, numeric, relative_error)`` arrays.
    """
    for _, p in params:
        p.zero_grad()
    loss_fn().backward()
    report = {}
    for name, p in params:
        analytic = p.grad.copy() if p.grad is not None else np.zeros(p.shape)
        numeric = numerical_grad(loss_fn, p, eps)
        report[name] = (analytic, numeric, relative_error(analytic, numeric))
    return report
