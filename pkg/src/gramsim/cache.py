from __future__ import annotations

from collections import OrderedDict
from typing import Any, Hashable, Optional


class ContentStore:
    """Fixed-capacity LRU store of content objects keyed by name."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: "OrderedDict[Hashable, Any]" = OrderedDict()
        self.evictions = 0

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, name: Hashable) -> bool:
        return name in self._items

    def get(self, name: Hashable) -> Optional[Any]:
        try:
            self._items.move_to_end(name)
        except KeyError:
            return None
        return self._items[name]

    def put(self, name: Hashable, obj: Any) -> None:
        items = self._items
        if name in items:
            items.move_to_end(name)
        items[name] = obj
        if len(items) > self.capacity:
            items.popitem(last=False)
            self.evictions += 1

    def keys(self):
        return list(self._items)
