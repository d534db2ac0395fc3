"""Central name-based catalog of library components.

Models, tasks, processors, dataset builders, LR schedulers and runners are
all constructed by name from configuration.  The registry holds one
name -> constructor map per namespace plus a small string key/value store
for shared paths (cache root, library root).

Constructor registration happens at import time (single-threaded); after
that the table is only read, so no locking is needed.  Constructors are
opaque to the registry: it never calls them.
"""

from mmkit.errors import (
    DuplicateNameError,
    InvalidNamespaceError,
    KeyMissingError,
    NotFoundError,
)

NAMESPACES = ("model", "task", "processor", "dataset_builder", "lr_scheduler", "runner")


def levenshtein(a: str, b: str) -> int:
    """Edit distance, used only to build typo suggestions."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class Registry:
    def __init__(self):
        self._tables = {ns: {} for ns in NAMESPACES}
        self._values = {}

    def _table(self, namespace):
        try:
            return self._tables[namespace]
        except KeyError:
            raise InvalidNamespaceError(namespace) from None

    def register(self, namespace, name, constructor=None):
        """Register `constructor` under (namespace, name).

        Usable directly or as a decorator:

            @registry.register("model", "clip_toy")
            class DualEncoderModel: ...

        Re-registering a name in the same namespace raises DuplicateNameError.
        """
        if constructor is None:
            def decorator(ctor):
                self.register(namespace, name, ctor)
                return ctor
            return decorator
        table = self._table(namespace)
        if not name:
            raise ValueError("registration name must be non-empty")
        if name in table:
            raise DuplicateNameError(namespace, name)
        table[name] = constructor
        return constructor

    def lookup(self, namespace, name):
        table = self._table(namespace)
        try:
            return table[name]
        except KeyError:
            raise NotFoundError(namespace, name, self._suggest(table, name)) from None

    def list_names(self, namespace):
        return sorted(self._table(namespace))

    @staticmethod
    def _suggest(table, name, limit=3):
        # Smallest edit distance first, ties broken lexicographically.
        ranked = sorted(table, key=lambda cand: (levenshtein(cand, name), cand))
        return ranked[:limit]

    # Shared string values (cache_root, library_root, ...).  Unlike
    # constructors, last write wins.
    def register_value(self, key, value):
        if not key:
            raise ValueError("value key must be non-empty")
        self._values[key] = value

    def get_value(self, key):
        try:
            return self._values[key]
        except KeyError:
            raise KeyMissingError(key) from None

    def has_value(self, key):
        return key in self._values


registry = Registry()
