"""Name-based forwarding plane: PIT, content store, FIB.

The Forwarder is pure table machinery: it receives packets plus the current
clock and answers with an action tuple; the simulation layer turns actions
into link events and byte-ledger charges. That keeps the semantics unit-
testable without an event loop.

Lookup order for an Interest is CS -> PIT -> FIB, with the forwarding hint
preferred over the name when present. PIT entries are keyed by
(name, app-parameter digest) so identical payload requests with different
deadlines stay distinct in flight; the content store is keyed by name alone
so a cached result serves any later deadline.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

Name = tuple[str, ...]

APP_FACE = "@app"


def parse_name(text: str) -> Name:
    return tuple(c for c in text.split("/") if c)


def format_name(name: Name) -> str:
    return "/" + "/".join(name)


@dataclass(slots=True)
class Interest:
    name: Name
    params: tuple | None = None  # (deadline_us, input_hash, input_size) for tasks
    hint: Name | None = None
    nonce: int = 0
    wire: int = 0
    kind: str = "task"  # task | thunk | input
    category: str = "task-forwarding"  # traffic-ledger bucket
    lifetime_us: int = 0  # PIT entry lifetime; 0 = forwarder default
    # carried simulation state (not part of matching)
    task_id: int = -1
    redirects: int = 0
    path_delay_us: int = 0
    best_effort: bool = False

    @property
    def pit_key(self) -> tuple:
        return (self.name, self.params)


@dataclass(slots=True)
class Data:
    name: Name
    payload: int = 0
    wire: int = 0
    freshness_us: int = 0
    category: str = "result-return"
    task_id: int = -1
    kind: str = "result"  # result | receipt | input | sync
    info: object | None = None
    params: tuple | None = None  # echo of the Interest's params for PIT match


class Pit:
    """Pending Interest Table with aggregation and lazy expiry.

    An entry is a plain list of (downstream face, expiry_us) pairs; an entry
    whose pairs are all past expiry counts as absent.
    """

    __slots__ = ("entries", "created", "aggregated", "satisfied", "expired", "_ops")

    def __init__(self) -> None:
        self.entries: dict[tuple, list[tuple[str, int]]] = {}
        self.created = 0
        self.aggregated = 0
        self.satisfied = 0
        self.expired = 0
        self._ops = 0

    def __len__(self) -> int:
        return len(self.entries)

    def insert(self, key: tuple, face: str, expiry_us: int, now: int) -> str:
        """Returns "new" or "aggregated"."""
        self._ops += 1
        if self._ops % 8192 == 0:
            self.purge(now)
        entry = self.entries.get(key)
        if entry is not None:
            if all(exp < now for _, exp in entry):
                self.expired += 1
                self.entries[key] = [(face, expiry_us)]
                self.created += 1
                return "new"
            entry.append((face, expiry_us))
            self.aggregated += 1
            return "aggregated"
        self.entries[key] = [(face, expiry_us)]
        self.created += 1
        return "new"

    def satisfy(self, key: tuple, now: int) -> list[str] | None:
        """Pop the entry and return its unexpired downstream faces."""
        entry = self.entries.pop(key, None)
        if entry is None:
            return None
        faces = [f for f, exp in entry if exp >= now]
        if not faces:
            self.expired += 1
            return None
        self.satisfied += 1
        return faces

    def purge(self, now: int) -> int:
        dead = [
            k for k, entry in self.entries.items()
            if all(exp < now for _, exp in entry)
        ]
        for k in dead:
            del self.entries[k]
        self.expired += len(dead)
        return len(dead)


class ContentStore:
    """Fixed-capacity LRU cache of Data keyed by bare name."""

    __slots__ = ("capacity", "freshness_us", "_store", "hits", "misses",
                 "insertions", "evictions")

    def __init__(self, capacity: int, freshness_us: int) -> None:
        self.capacity = capacity
        self.freshness_us = freshness_us
        self._store: OrderedDict[Name, tuple[Data, int]] = OrderedDict()
        self.hits = 0
        self.misses = 0
        self.insertions = 0
        self.evictions = 0

    def __len__(self) -> int:
        return len(self._store)

    def insert(self, data: Data, now: int) -> None:
        if self.capacity <= 0:
            return
        store = self._store
        if data.name in store:
            store.pop(data.name)
        elif len(store) >= self.capacity:
            store.popitem(last=False)
            self.evictions += 1
        store[data.name] = (data, now)
        self.insertions += 1

    def get(self, name: Name, now: int) -> Data | None:
        found = self._store.get(name)
        if found is None:
            self.misses += 1
            return None
        data, stored_at = found
        fresh_for = data.freshness_us if data.freshness_us > 0 else self.freshness_us
        if now - stored_at > fresh_for:
            self.misses += 1
            del self._store[name]
            return None
        self._store.move_to_end(name)
        self.hits += 1
        return data


class Fib:
    """Longest-prefix-match table; one face per prefix, inserts replace."""

    __slots__ = ("table",)

    def __init__(self) -> None:
        self.table: dict[Name, str] = {}

    def insert_route(self, prefix: Name, face: str) -> None:
        self.table[prefix] = face

    def lookup(self, name: Name) -> str | None:
        table = self.table
        face = table.get(name)
        if face is not None:
            return face
        for k in range(len(name) - 1, 0, -1):
            face = table.get(name[:k])
            if face is not None:
                return face
        return None


class Forwarder:
    """Per-node forwarding state machine."""

    __slots__ = ("node_id", "fib", "pit", "cs", "counters")

    def __init__(self, node_id: str, cs_capacity: int = 0, cs_freshness_us: int = 0) -> None:
        self.node_id = node_id
        self.fib = Fib()
        self.pit = Pit()
        self.cs = ContentStore(cs_capacity, cs_freshness_us)
        self.counters = {"no_route": 0, "unsolicited": 0}

    def process_interest(
        self, interest: Interest, in_face: str, now: int, expiry_us: int
    ) -> tuple:
        """One of:

        ("cs", data)          -- cache hit, answer downstream
        ("aggregated",)       -- joined an existing PIT entry, nothing to send
        ("app",)              -- PIT entry created, deliver to the local app
        ("forward", face)     -- PIT entry created, send out `face`
        ("drop_no_route",)    -- nothing matched

        The table operations are unrolled here rather than delegated to the
        Pit/ContentStore methods: this is by far the hottest code in a run
        and the extra call frames are measurable. The logic must stay
        behaviourally identical to the standalone methods.
        """
        cs = self.cs
        found = cs._store.get(interest.name)
        if found is not None:
            data = cs.get(interest.name, now)
            if data is not None:
                return ("cs", data)
        else:
            cs.misses += 1
        pit = self.pit
        entries = pit.entries
        key = (interest.name, interest.params)
        entry = entries.get(key)
        if entry is not None:
            live = False
            for _, exp in entry:
                if exp >= now:
                    live = True
                    break
            if live:
                pit._ops += 1
                if pit._ops % 8192 == 0:
                    pit.purge(now)
                entry.append((in_face, expiry_us))
                pit.aggregated += 1
                return ("aggregated",)
        face = None
        if interest.hint is not None:
            face = self.fib.lookup(interest.hint)
        if face is None:
            face = self.fib.lookup(interest.name)
        if face is None:
            self.counters["no_route"] += 1
            return ("drop_no_route",)
        pit._ops += 1
        if pit._ops % 8192 == 0:
            pit.purge(now)
            entry = entries.get(key)  # the purge may have collected it
        if entry is not None:
            pit.expired += 1
        entries[key] = [(in_face, expiry_us)]
        pit.created += 1
        if face == APP_FACE:
            return ("app",)
        return ("forward", face)

    def process_data(self, data: Data, now: int) -> tuple:
        """("satisfy", faces) after CS insert, or ("unsolicited",).

        Unrolled for the same reason as process_interest.
        """
        pit = self.pit
        entry = pit.entries.pop((data.name, data.params), None)
        if entry is None:
            self.counters["unsolicited"] += 1
            return ("unsolicited",)
        faces = [f for f, exp in entry if exp >= now]
        if not faces:
            pit.expired += 1
            self.counters["unsolicited"] += 1
            return ("unsolicited",)
        pit.satisfied += 1
        cs = self.cs
        if cs.capacity > 0:
            store = cs._store
            name = data.name
            if name in store:
                store.pop(name)
            elif len(store) >= cs.capacity:
                store.popitem(last=False)
                cs.evictions += 1
            store[name] = (data, now)
            cs.insertions += 1
        return ("satisfy", faces)
