# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Brownian-walk kernel.

Contract shared with the numpy fallback (see _kernel_py.py): identical
per-trial RNG streams, identical draw order (x, y, z per step), identical
rounding (one multiply and one add per coordinate per step, distance as
(dx*dx + dy*dy) + dz*dz), identical tie-breaking (nearest center, lowest
index). The two backends must produce bit-identical outputs.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport INFINITY
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

from numpy.random import PCG64, SeedSequence

cnp.import_array()


def run_trials(object centers_obj, double radius_a, double sigma,
               long long n_steps, object seed, long long start_trial,
               long long n_trials):
    """Walk ``n_trials`` independent molecules from the origin.

    Returns (hit_idx, hit_step): per trial the 0-based index of the absorbing
    receiver (-1 if never absorbed) and the 1-based step of absorption
    (0 if never absorbed). Trial ``start_trial + i`` always consumes the
    stream PCG64(SeedSequence(seed, spawn_key=(start_trial + i,))), making
    results independent of how trials are batched across calls or workers.
    """
    centers = np.ascontiguousarray(centers_obj, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[1] != 3:
        raise ValueError(f"centers must be (n, 3), got {centers.shape}")
    cdef double[:, ::1] c = centers
    cdef Py_ssize_t n_rec = c.shape[0]
    hit_idx_arr = np.full(n_trials, -1, dtype=np.int64)
    hit_step_arr = np.zeros(n_trials, dtype=np.int64)
    cdef cnp.int64_t[::1] hit_idx = hit_idx_arr
    cdef cnp.int64_t[::1] hit_step = hit_step_arr
    cdef bitgen_t *rng
    cdef double a2 = radius_a * radius_a
    cdef double x, y, z, dx, dy, dz, d2, best
    cdef Py_ssize_t i, j
    cdef long long k, step_hit
    cdef long long best_j, hit_j
    for i in range(n_trials):
        bg = PCG64(SeedSequence(seed, spawn_key=(start_trial + i,)))
        capsule = bg.capsule
        rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
        x = 0.0
        y = 0.0
        z = 0.0
        hit_j = -1
        step_hit = 0
        with nogil:
            for k in range(1, n_steps + 1):
                x = x + sigma * random_standard_normal(rng)
                y = y + sigma * random_standard_normal(rng)
                z = z + sigma * random_standard_normal(rng)
                best = INFINITY
                best_j = -1
                for j in range(n_rec):
                    dx = x - c[j, 0]
                    dy = y - c[j, 1]
                    dz = z - c[j, 2]
                    d2 = (dx * dx + dy * dy) + dz * dz
                    if d2 < best:
                        best = d2
                        best_j = j
                if best <= a2:
                    hit_j = best_j
                    step_hit = k
                    break
        hit_idx[i] = hit_j
        hit_step[i] = step_hit
    return hit_idx_arr, hit_step_arr
