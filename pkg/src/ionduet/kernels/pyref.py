"""Pure-numpy reference implementation of the hot-loop kernels.

Semantics contract shared with the compiled backend:

* ``apply_phased_rotation``: out = V exp(-i w t) V^dag psi, per trial.
* ``poisson_mixture_counts``: invert each component's Poisson CDF at the
  supplied uniform, summing components per trial.  The recurrence
  ``p *= lam/k; cdf += p`` starts from a caller-supplied ``exp(-lam)`` so
  both backends perform bit-identical arithmetic; the returned count is the
  first k with u <= cdf(k), capped at K_MAX.
"""

import numpy as np

#: Hard cap on the inversion loop; far above any physical count here.
K_MAX = 4096


def apply_phased_rotation(states, basis, eigvals, times):
    """Propagate trial states through one pulse given its eigensystem.

    states: complex (n_trials, dim); basis: complex (dim, dim) columns are
    eigenvectors; eigvals: float (dim,); times: float (n_trials,) effective
    durations (pulse duration times the per-trial Rabi scale).
    """
    states = np.ascontiguousarray(states, dtype=np.complex128)
    basis = np.ascontiguousarray(basis, dtype=np.complex128)
    eigvals = np.ascontiguousarray(eigvals, dtype=np.float64)
    times = np.ascontiguousarray(times, dtype=np.float64)
    y = states @ basis.conj()
    y *= np.exp(-1j * np.outer(times, eigvals))
    return y @ basis.T


def poisson_mixture_counts(uniforms, lams, p_zero):
    """Summed Poisson counts per trial from per-component uniforms.

    uniforms, lams, p_zero: float (n_trials, n_components) with
    ``p_zero = exp(-lams)`` computed by the caller.  Returns int64
    (n_trials,).
    """
    u = np.ascontiguousarray(uniforms, dtype=np.float64)
    lam = np.ascontiguousarray(lams, dtype=np.float64)
    p = np.array(p_zero, dtype=np.float64, copy=True)
    cdf = p.copy()
    counts = np.zeros(u.shape, dtype=np.int64)
    active = u > cdf
    k = 0
    while active.any() and k < K_MAX:
        k += 1
        p *= lam / k
        cdf += p
        counts[active] += 1
        active &= u > cdf
    return counts.sum(axis=1)
