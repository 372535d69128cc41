"""Experience replay: fixed-capacity ring with seeded uniform sampling."""
from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """Stores fixed-shape tuples of arrays, oldest overwritten first.

    Storage is allocated on the first push from that transition's field
    shapes; every later push must match them.
    """

    def __init__(self, capacity: int, rng: np.random.Generator):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._rng = rng
        self._fields = None
        self._n = 0
        self._at = 0

    def __len__(self) -> int:
        return self._n

    def push(self, *fields) -> None:
        arrays = [np.asarray(f, dtype=float) for f in fields]
        if self._fields is None:
            self._fields = [np.empty((self.capacity, *a.shape)) for a in arrays]
        if len(arrays) != len(self._fields):
            raise ValueError("field count changed between pushes")
        for store, a in zip(self._fields, arrays):
            if store.shape[1:] != a.shape:
                raise ValueError("field shape changed between pushes")
            store[self._at] = a
        self._at = (self._at + 1) % self.capacity
        self._n = min(self._n + 1, self.capacity)

    def sample(self, batch_size: int):
        """Uniform with replacement; tuple of (batch, ...) arrays."""
        if self._n == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = self._rng.integers(0, self._n, size=int(batch_size))
        return tuple(store[idx] for store in self._fields)

    def state(self) -> dict:
        """Contents and cursor, for checkpointing."""
        out = {"n": np.array(self._n), "at": np.array(self._at),
               "capacity": np.array(self.capacity)}
        if self._fields is not None:
            for i, store in enumerate(self._fields):
                out[f"field{i}"] = store[:self._n].copy() if self._n \
                    < self.capacity else store.copy()
        return out

    def load_state(self, state: dict) -> None:
        if int(state["capacity"]) != self.capacity:
            raise ValueError("checkpoint capacity mismatch")
        self._n = int(state["n"])
        self._at = int(state["at"])
        keys = sorted(k for k in state if k.startswith("field"))
        if keys:
            self._fields = []
            for k in keys:
                data = np.asarray(state[k])
                store = np.empty((self.capacity, *data.shape[1:]))
                store[:len(data)] = data
                self._fields.append(store)
        else:
            self._fields = None
