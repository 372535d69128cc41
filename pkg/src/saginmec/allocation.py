"""Computing-resource allocation on a serving UAV.

Given the cycle demands (work) of the UDs in one coalition, the serving
UAV splits its CPU budget to minimize the summed compute delay
sum_i work_i / f_i subject to sum_i f_i = f_max.  The minimizer has the
closed form f_i = sqrt(work_i) * f_max / sum_j sqrt(work_j): stationarity
gives f_i proportional to sqrt(work_i), and the budget fixes the constant.

`oracle_allocate` is an independent brute-force check used by the test
suite; it never looks at the closed form.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np


def allocate_computing(work_cycles, f_max: float) -> np.ndarray:
    """Square-root-proportional split of f_max over the coalition.

    Zero-work members get zero; an all-zero coalition gets all zeros.
    The shares of active members sum to f_max up to float rounding.
    """
    work = np.asarray(work_cycles, dtype=float)
    if np.any(work < 0):
        raise ValueError("work must be non-negative")
    roots = np.sqrt(work)
    total = roots.sum()
    if total == 0.0:
        return np.zeros_like(work)
    return roots * (f_max / total)


def equal_allocate(work_cycles, f_max: float) -> np.ndarray:
    """Uniform split of f_max over the members with positive work.

    Ablation rule: ignores how demanding each task is, so its summed
    compute delay can only match or exceed the square-root split's.
    """
    work = np.asarray(work_cycles, dtype=float)
    if np.any(work < 0):
        raise ValueError("work must be non-negative")
    active = work > 0
    count = int(np.count_nonzero(active))
    out = np.zeros_like(work)
    if count:
        out[active] = f_max / count
    return out


def allocation_objective(work_cycles, f_alloc) -> float:
    """sum work/f over members with positive work; inf if one is starved."""
    work = np.asarray(work_cycles, dtype=float)
    f = np.asarray(f_alloc, dtype=float)
    active = work > 0
    if np.any(f[active] <= 0):
        return float("inf")
    return float(np.sum(work[active] / f[active]))


def _compositions(total: int, parts: int):
    """All non-negative integer vectors of length `parts` summing to
    `total`, via divider positions (stars and bars)."""
    for dividers in combinations(range(total + parts - 1), parts - 1):
        prev = -1
        counts = []
        for d in dividers:
            counts.append(d - prev - 1)
            prev = d
        counts.append(total + parts - 2 - prev)
        yield counts


def oracle_allocate(work_cycles, f_max: float, grid_n: int = 24) -> np.ndarray:
    """Brute-force minimizer of the summed compute delay on the simplex.

    Enumerates the integer grid {c/grid_n * f_max : sum c = grid_n} over
    the positive-work members, then polishes the best grid point with a
    pairwise-exchange descent at shrinking step sizes.  Test-suite tool;
    cost grows combinatorially, so it insists on at most 5 active members.
    """
    work = np.asarray(work_cycles, dtype=float)
    active = np.nonzero(work > 0)[0]
    k = len(active)
    if k > 5:
        raise ValueError("oracle handles at most 5 active members")
    out = np.zeros_like(work)
    if k == 0:
        return out
    if k == 1:
        out[active[0]] = f_max
        return out

    w = work[active]
    best_f = None
    best_obj = float("inf")
    for counts in _compositions(grid_n, k):
        f = np.asarray(counts, dtype=float) * (f_max / grid_n)
        obj = allocation_objective(w, f)
        if obj < best_obj:
            best_obj = obj
            best_f = f

    # Pairwise-exchange polish: move budget between two members while it
    # helps, halving the step; keeps the simplex constraint exactly.
    step = f_max / grid_n
    f = best_f.copy()
    while step > f_max * 1e-8:
        improved = True
        while improved:
            improved = False
            for i in range(k):
                for j in range(k):
                    if i == j or f[j] < step:
                        continue
                    f[i] += step
                    f[j] -= step
                    obj = allocation_objective(w, f)
                    if obj < best_obj:
                        best_obj = obj
                        improved = True
                    else:
                        f[i] -= step
                        f[j] += step
        step *= 0.5

    out[active] = f
    return out
