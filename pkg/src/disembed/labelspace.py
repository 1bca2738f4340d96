"""Similarity notions, tags, multi-hot encodings, and the disjoint mask layout.

A label space is an ordered list of notions (e.g. genre, mood), each owning an
ordered list of tags.  The embedding dimension is split into contiguous equal
blocks, one per notion, in declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Notion:
    name: str
    tags: tuple[str, ...]


@dataclass(frozen=True)
class Mask:
    """Binary selector for one notion's block of the embedding space."""

    notion: str
    vector: np.ndarray  # {0,1} floats, length d


class LabelSpace:
    """Immutable declaration of notions, tags, and the embedding layout."""

    def __init__(self, notions, embedding_dim: int):
        notions = tuple(
            n if isinstance(n, Notion) else Notion(n[0], tuple(n[1]))
            for n in notions
        )
        if not notions:
            raise ConfigurationError("label space needs at least one notion")
        if embedding_dim <= 0:
            raise ConfigurationError("embedding_dim must be positive")
        if embedding_dim % len(notions) != 0:
            raise ConfigurationError(
                f"embedding_dim {embedding_dim} not divisible by "
                f"{len(notions)} notions"
            )
        self.notions = notions
        self.embedding_dim = int(embedding_dim)
        self.tags: tuple[str, ...] = tuple(t for n in notions for t in n.tags)
        if len(set(self.tags)) != len(self.tags):
            raise ConfigurationError("tag names must be unique across notions")
        self.tag_index = {t: i for i, t in enumerate(self.tags)}
        self._tag_notion = {t: n.name for n in notions for t in n.tags}
        self._notion_index = {n.name: i for i, n in enumerate(notions)}
        if len(self._notion_index) != len(notions):
            raise ConfigurationError("notion names must be unique")

    @property
    def num_tags(self) -> int:
        return len(self.tags)

    @property
    def num_notions(self) -> int:
        return len(self.notions)

    @property
    def block_size(self) -> int:
        return self.embedding_dim // self.num_notions

    def notion_index(self, name: str) -> int:
        if name not in self._notion_index:
            raise ConfigurationError(f"unknown notion: {name!r}")
        return self._notion_index[name]

    def notion_of(self, tag: str) -> str:
        """The unique notion owning ``tag``."""
        if tag not in self._tag_notion:
            raise ConfigurationError(f"unknown tag: {tag!r}")
        return self._tag_notion[tag]

    def tag_indices_of_notion(self, name: str) -> np.ndarray:
        i = self.notion_index(name)
        return np.array(
            [self.tag_index[t] for t in self.notions[i].tags], dtype=np.intp
        )

    def block_slice(self, name: str) -> slice:
        i = self.notion_index(name)
        b = self.block_size
        return slice(i * b, (i + 1) * b)

    def multi_hot(self, tags) -> np.ndarray:
        """Binary vector over all tags in global ordering."""
        v = np.zeros(self.num_tags)
        for t in tags:
            if t not in self.tag_index:
                raise ConfigurationError(f"unknown tag: {t!r}")
            v[self.tag_index[t]] = 1.0
        return v

    def decode(self, vector) -> tuple[str, ...]:
        """Inverse of multi_hot on tag sets."""
        vector = np.asarray(vector)
        if vector.shape != (self.num_tags,):
            raise ConfigurationError(
                f"expected label vector of length {self.num_tags}"
            )
        return tuple(t for t, x in zip(self.tags, vector) if x != 0)

    def mask(self, notion: str) -> Mask:
        v = np.zeros(self.embedding_dim)
        v[self.block_slice(notion)] = 1.0
        return Mask(notion, v)

    def to_dict(self) -> dict:
        return {
            "notions": [{"name": n.name, "tags": list(n.tags)} for n in self.notions],
            "embedding_dim": self.embedding_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabelSpace":
        try:
            notions = [(n["name"], n["tags"]) for n in d["notions"]]
            return cls(notions, d["embedding_dim"])
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"bad label space declaration: {exc}") from exc


def build_masks(space: LabelSpace) -> list[Mask]:
    """One mask per notion; contiguous equal blocks in declaration order."""
    if space.embedding_dim % space.num_notions != 0:
        raise ConfigurationError("embedding_dim not divisible by notion count")
    return [space.mask(n.name) for n in space.notions]
