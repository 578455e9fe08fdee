"""Cache configurations and the grids searched over them."""

from dataclasses import dataclass
from typing import List, Tuple

from .errors import InvalidBlockSize, InvalidConfig
from .trace import check_block_size as _check_block


def check_block_size(block_bytes):
    try:
        return _check_block(block_bytes)
    except InvalidBlockSize as e:
        raise InvalidConfig(str(e)) from None


FIFO = "FIFO"


def _is_pow2(x):
    return isinstance(x, int) and x >= 1 and not x & (x - 1)


@dataclass(frozen=True, order=True)
class CacheConfig:
    sets: int
    assoc: int
    block_bytes: int = 4
    replacement: str = FIFO

    def __post_init__(self):
        if not _is_pow2(self.sets):
            raise InvalidConfig(f"set count must be a power of two, got {self.sets}")
        if not isinstance(self.assoc, int) or self.assoc < 1:
            raise InvalidConfig(f"associativity must be >= 1, got {self.assoc}")
        check_block_size(self.block_bytes)
        if self.replacement != FIFO:
            raise InvalidConfig(f"only FIFO replacement is supported, got {self.replacement}")

    @property
    def capacity(self):
        return self.sets * self.assoc * self.block_bytes

    @property
    def label(self):
        return f"{self.sets}X{self.assoc}"

    def __str__(self):
        return f"({self.label}, B={self.block_bytes})"

    @classmethod
    def parse(cls, text, block_bytes=4):
        """Parse ``"8x2"`` / ``"8X2"`` into a config."""
        try:
            s, a = text.lower().split("x")
            return cls(int(s), int(a), block_bytes)
        except ValueError:
            raise InvalidConfig(f"expected <sets>x<assoc>, got {text!r}") from None


def capacity(config: CacheConfig) -> int:
    return config.capacity


@dataclass(frozen=True)
class DesignSpace:
    set_sizes: Tuple[int, ...]
    assocs: Tuple[int, ...]
    block_bytes: int = 4

    def __post_init__(self):
        object.__setattr__(self, "set_sizes", tuple(int(s) for s in self.set_sizes))
        object.__setattr__(self, "assocs", tuple(int(a) for a in self.assocs))
        for name in ("set_sizes", "assocs"):
            vals = getattr(self, name)
            if not vals:
                raise InvalidConfig(f"{name} must not be empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise InvalidConfig(f"{name} must be strictly increasing: {vals}")
        for s in self.set_sizes:
            if not _is_pow2(s):
                raise InvalidConfig(f"set size {s} is not a power of two")
        if self.assocs[0] < 1:
            raise InvalidConfig("associativities must be >= 1")
        check_block_size(self.block_bytes)

    def __len__(self):
        return len(self.set_sizes) * len(self.assocs)

    def __iter__(self):
        return iter(enumerate_space(self))

    def config(self, level, assoc_index):
        return CacheConfig(self.set_sizes[level], self.assocs[assoc_index], self.block_bytes)

    def index(self, config: CacheConfig):
        """(level, assoc index) of ``config``; ValueError if absent."""
        if config.block_bytes != self.block_bytes:
            raise ValueError(f"{config} has a different block size than the space")
        return self.set_sizes.index(config.sets), self.assocs.index(config.assoc)

    def to_dict(self):
        return {"sets": list(self.set_sizes), "assocs": list(self.assocs),
                "block": self.block_bytes}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["sets"]), tuple(d["assocs"]), d["block"])


def enumerate_space(space: DesignSpace) -> List[CacheConfig]:
    """All configurations, ordered by set count then associativity."""
    return [CacheConfig(s, a, space.block_bytes)
            for s in space.set_sizes for a in space.assocs]


def powers_of_two(lo, hi):
    if not (_is_pow2(lo) and _is_pow2(hi)) or lo > hi:
        raise InvalidConfig(f"bad power-of-two range {lo}..{hi}")
    out = []
    v = lo
    while v <= hi:
        out.append(v)
        v <<= 1
    return tuple(out)


def parse_sets(text):
    """``"1..16384"`` (powers of two) or a comma list like ``"1,2,8"``."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return powers_of_two(int(lo), int(hi))
    return tuple(int(t) for t in text.split(","))


def parse_assocs(text):
    return tuple(int(t) for t in text.strip().split(","))


DEFAULT_SETS = powers_of_two(1, 16384)
DEFAULT_ASSOCS = (1, 2, 4, 8, 16)
DEFAULT_BLOCK = 4


def default_space() -> DesignSpace:
    return DesignSpace(DEFAULT_SETS, DEFAULT_ASSOCS, DEFAULT_BLOCK)


@dataclass(frozen=True)
class HierarchyConfig:
    """P identical private caches in front of one shared cache."""

    private: CacheConfig
    shared: CacheConfig
    processor_count: int

    def __post_init__(self):
        if self.private.block_bytes != self.shared.block_bytes:
            raise InvalidConfig("private and shared levels must use the same block size")
        if self.processor_count < 1:
            raise InvalidConfig("processor_count must be >= 1")

    @property
    def capacity(self):
        return hierarchy_capacity(self)


def hierarchy_capacity(h: HierarchyConfig) -> int:
    return h.processor_count * h.private.capacity + h.shared.capacity
