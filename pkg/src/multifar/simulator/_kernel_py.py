"""Pure-numpy Brownian-walk kernel, the fallback when the extension is absent.

Bit-compatibility contract with the compiled kernel (_kernel.pyx):

- per-trial stream: PCG64(SeedSequence(seed, spawn_key=(trial,)));
- draw order: x, y, z per step, which is exactly the row-major order of
  ``standard_normal((k, 3))`` on the same stream;
- position update rounds once per multiply and once per add per coordinate:
  ``np.add.accumulate`` chains rows sequentially, matching the scalar
  ``x += sigma * n``;
- squared distance sums the three coordinate terms left to right (numpy
  reduces a length-3 axis sequentially), matching (dx*dx + dy*dy) + dz*dz;
- absorption at the first step whose nearest center is within the radius;
  ties go to the lowest receiver index (``argmin`` returns the first hit).

The only behavioral difference is invisible in the outputs: this kernel
draws normals in chunks, so an absorbed trial may have consumed more of its
(private) stream than the scalar loop would.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 4096


def run_trials(
    centers,
    radius_a: float,
    sigma: float,
    n_steps: int,
    seed: int,
    start_trial: int,
    n_trials: int,
):
    """Walk ``n_trials`` independent molecules from the origin.

    Returns (hit_idx, hit_step): per trial the 0-based index of the absorbing
    receiver (-1 if never absorbed) and the 1-based step of absorption
    (0 if never absorbed).
    """
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[1] != 3:
        raise ValueError(f"centers must be (n, 3), got {centers.shape}")
    a2 = radius_a * radius_a
    hit_idx = np.full(n_trials, -1, dtype=np.int64)
    hit_step = np.zeros(n_trials, dtype=np.int64)
    buf = np.empty((_CHUNK + 1, 3))
    for i in range(n_trials):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(start_trial + i,)))
        )
        pos = np.zeros(3)
        done = 0
        while done < n_steps:
            k = min(_CHUNK, n_steps - done)
            block = buf[: k + 1]
            block[0] = pos
            np.multiply(rng.standard_normal((k, 3)), sigma, out=block[1:])
            np.add.accumulate(block, axis=0, out=block)
            positions = block[1:]
            diff = positions[:, None, :] - centers[None, :, :]
            d2 = (diff * diff).sum(axis=2)
            nearest = d2.min(axis=1)
            rows = np.nonzero(nearest <= a2)[0]
            if rows.size:
                row = int(rows[0])
                hit_idx[i] = int(np.argmin(d2[row]))
                hit_step[i] = done + row + 1
                break
            pos = positions[-1].copy()
            done += k
    return hit_idx, hit_step
