"""Text encodings: map node ordinals to names and edges to a relation phrase.

The name pools are small placeholders; each holds at least ``MAX_NODES``
distinct single-word names so any generated graph can be encoded.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from nag.graph import TextGraph


class TextEncodingScheme(str, enum.Enum):
    ADJACENCY = "adjacency"
    EXPERT = "expert"
    FRIENDSHIP = "friendship"
    GOT = "got"
    POLITICIAN = "politician"
    SOCIAL_NETWORK = "social-network"
    SOUTH_PARK = "south-park"


ALL_ENCODINGS = tuple(TextEncodingScheme)


class NamePoolExhausted(ValueError):
    pass


@dataclass(frozen=True)
class SchemeVocab:
    names: tuple[str, ...] | None  # None: integer ids by ordinal
    relation: str  # edge text
    noun: str
    nouns: str
    relations: str


_SCHEMES: dict[TextEncodingScheme, SchemeVocab] = {
    TextEncodingScheme.ADJACENCY: SchemeVocab(None, "edge", "node", "nodes", "edges"),
    TextEncodingScheme.EXPERT: SchemeVocab(
        (
            "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis",
            "Rodriguez", "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson",
            "Taylor", "Moore", "Jackson", "Martin", "Lee", "Thompson", "White",
        ),
        "coauthorship", "expert", "experts", "coauthorships",
    ),
    TextEncodingScheme.FRIENDSHIP: SchemeVocab(
        (
            "James", "Mary", "John", "Patricia", "Robert", "Jennifer", "Michael", "Linda",
            "William", "Elizabeth", "David", "Barbara", "Richard", "Susan", "Joseph", "Jessica",
            "Thomas", "Sarah", "Charles", "Karen", "Daniel", "Nancy",
        ),
        "friendship", "person", "people", "friendships",
    ),
    TextEncodingScheme.GOT: SchemeVocab(
        (
            "Jon", "Arya", "Sansa", "Bran", "Robb", "Rickon", "Ned", "Catelyn", "Tyrion",
            "Cersei", "Jaime", "Tywin", "Daenerys", "Jorah", "Theon", "Samwell", "Brienne",
            "Davos", "Stannis", "Renly", "Joffrey", "Tommen",
        ),
        "alliance", "character", "characters", "alliances",
    ),
    TextEncodingScheme.POLITICIAN: SchemeVocab(
        (
            "Lincoln", "Grant", "Hayes", "Garfield", "Arthur", "Cleveland", "Harrison",
            "McKinley", "Roosevelt", "Taft", "Harding", "Coolidge", "Hoover", "Truman",
            "Eisenhower", "Kennedy", "Nixon", "Ford", "Carter", "Reagan", "Bush", "Obama",
        ),
        "coalition", "politician", "politicians", "coalitions",
    ),
    TextEncodingScheme.SOCIAL_NETWORK: SchemeVocab(
        (
            "Alice", "Bob", "Carol", "Dave", "Eve", "Frank", "Grace", "Hank", "Ivan", "Judy",
            "Kim", "Leo", "Mallory", "Nina", "Oscar", "Peggy", "Quinn", "Rupert", "Sybil",
            "Trent", "Uma", "Victor",
        ),
        "connection", "user", "users", "connections",
    ),
    TextEncodingScheme.SOUTH_PARK: SchemeVocab(
        (
            "Stan", "Kyle", "Cartman", "Kenny", "Butters", "Wendy", "Randy", "Sharon",
            "Gerald", "Sheila", "Liane", "Chef", "Garrison", "Mackey", "Token", "Clyde",
            "Craig", "Tweek", "Jimmy", "Timmy", "Bebe", "Heidi",
        ),
        "bond", "character", "characters", "bonds",
    ),
}


def scheme_vocab(scheme: TextEncodingScheme | str) -> SchemeVocab:
    return _SCHEMES[TextEncodingScheme(scheme)]


def apply_text_encoding(g: TextGraph, scheme: TextEncodingScheme | str, seed: int) -> TextGraph:
    """Replace node texts by scheme names and edge texts by its relation phrase.

    Name-pool schemes assign a seeded random sample of distinct names; the
    adjacency scheme uses the node ordinal as its name. Ids and topology are
    left untouched.
    """
    vocab = scheme_vocab(scheme)
    n = len(g.nodes)
    if vocab.names is None:
        names = [str(i) for i in range(n)]
    else:
        if n > len(vocab.names):
            raise NamePoolExhausted(f"scheme {TextEncodingScheme(scheme).value!r} has {len(vocab.names)} names, graph needs {n}")
        names = random.Random(seed).sample(vocab.names, n)
    return g.with_texts(names, [vocab.relation] * len(g.edges))
