"""The square-root compute split against brute force and the equal split.

A UAV divides its cycles among coalition members to minimize the summed
compute delay.  The closed form weights each member by the square root
of its workload; the demo checks that against a grid-search oracle and
shows what the equal split loses.
"""
import numpy as np

from saginmec.allocation import (allocate_computing, allocation_objective,
                                 equal_allocate, oracle_allocate)

f_max = 3.0e9
works = np.array([2.0e8, 8.0e8, 3.2e9])  # cycles each member needs

closed = allocate_computing(works, f_max)
oracle = oracle_allocate(works, f_max)
equal = equal_allocate(works, f_max)

print(f"budget {f_max / 1e9:.1f} GHz over workloads "
      f"{[f'{w / 1e9:.2f}G' for w in works]}")
print(f"{'member':>6} {'closed GHz':>11} {'oracle GHz':>11} "
      f"{'equal GHz':>10}")
for i in range(len(works)):
    print(f"{i:6d} {closed[i] / 1e9:11.4f} {oracle[i] / 1e9:11.4f} "
          f"{equal[i] / 1e9:10.4f}")

obj_c = allocation_objective(works, closed)
obj_o = allocation_objective(works, oracle)
obj_e = allocation_objective(works, equal)
print(f"\nsummed delay: closed {obj_c:.6f}s, oracle {obj_o:.6f}s, "
      f"equal {obj_e:.6f}s")
print(f"closed vs oracle gap: {abs(obj_c - obj_o) / obj_o:.2e} relative")
print(f"equal split pays {100 * (obj_e / obj_c - 1):.1f}% extra delay")
print(f"budget exactly spent: sum(f) - f_max = "
      f"{np.sum(closed) - f_max:+.3e} Hz")
