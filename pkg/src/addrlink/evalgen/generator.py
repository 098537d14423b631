"""Synthetic reference addresses and seeded corruption with ground truth."""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from ..ingest import AddressRecord, DatasetError, PathLike, _atomic_open

_ONSETS = ["B", "BR", "C", "CH", "CL", "D", "DR", "F", "G", "GL", "H", "K", "L", "M",
           "N", "P", "PR", "R", "S", "SH", "ST", "T", "TR", "V", "W", "Y", "Z"]
_VOWELS = ["A", "E", "I", "O", "U", "AI", "EA", "OO", "OU", "IE"]
_CODAS = ["", "", "", "N", "R", "L", "S", "T", "M", "NG", "CK", "RD", "LL"]

# state -> (postcode low, postcode high)
_STATES = {
    "NSW": (2000, 2599), "ACT": (2600, 2620), "VIC": (3000, 3999), "QLD": (4000, 4999),
    "SA": (5000, 5799), "WA": (6000, 6799), "TAS": (7000, 7799), "NT": (800, 899),
}
_STATE_WEIGHTS = [32, 2, 26, 20, 7, 10, 2, 1]
_STREET_TYPES = ["STREET", "ROAD", "AVENUE", "PLACE", "DRIVE", "COURT", "CRESCENT",
                 "LANE", "PARADE", "CLOSE", "HIGHWAY", "TERRACE"]
_STREET_TYPE_WEIGHTS = [40, 20, 12, 6, 8, 6, 3, 2, 1, 1, 1, 1]


@lru_cache(maxsize=None)
def synonym_groups() -> tuple[tuple[str, ...], ...]:
    """Variant groups from the bundled table; each variant may span several words."""
    text = resources.files(__package__).joinpath("synonyms.tsv").read_text(encoding="utf-8")
    groups = []
    for line in text.splitlines():
        if line and not line.startswith("#"):
            groups.append(tuple(line.split("\t")))
    return tuple(groups)


def _pseudo_word(rng: random.Random) -> str:
    n = rng.choice((2, 2, 2, 3))
    return "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS) for _ in range(n))


def _distinct_words(rng: random.Random, n: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        w = _pseudo_word(rng)
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def generate_reference(
    seed: int,
    n: int,
    streets: Optional[int] = None,
    suburbs: Optional[int] = None,
    max_number: int = 400,
    unit_rate: float = 0.25,
) -> list[AddressRecord]:
    """``n`` distinct clean addresses with ids 1..n.

    Shape: ``[UNIT u] number STREETNAME STREETTYPE SUBURB STATE POSTCODE``.
    Pool sizes default to grow with ``n`` so that most two-word phrases stay
    rare; pass small pools to get dense, collision-heavy corpora.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    n_streets = streets or max(20, n // 8)
    n_suburbs = suburbs or max(10, n // 40)
    taken: set[str] = set()
    street_names = _distinct_words(rng, n_streets, taken)
    suburb_names = _distinct_words(rng, n_suburbs, taken)
    states = list(_STATES)
    localities = []
    for name in suburb_names:
        state = rng.choices(states, _STATE_WEIGHTS)[0]
        lo, hi = _STATES[state]
        localities.append((name, state, f"{rng.randint(lo, hi):04d}"))

    seen: set[str] = set()
    texts: list[str] = []
    attempts = 0
    budget = 50 * n + 1000
    while len(texts) < n:
        attempts += 1
        if attempts > budget:
            raise ValueError(
                f"component space too small: only {len(texts)} distinct addresses "
                f"after {attempts - 1} draws (asked for {n})"
            )
        suburb, state, postcode = rng.choice(localities)
        parts = []
        if rng.random() < unit_rate:
            parts += ["UNIT", str(rng.randint(1, 60))]
        parts += [
            str(rng.randint(1, max_number)),
            rng.choice(street_names),
            rng.choices(_STREET_TYPES, _STREET_TYPE_WEIGHTS)[0],
            suburb,
            state,
            postcode,
        ]
        text = " ".join(parts)
        if text not in seen:
            seen.add(text)
            texts.append(text)
    return [AddressRecord(i, t) for i, t in enumerate(texts, 1)]


@dataclass(frozen=True)
class CorruptionProfile:
    """Per-record probabilities of each corruption, plus the RNG seed."""

    typo: float = 0.0
    drop_postcode: float = 0.0
    drop_locality: float = 0.0
    abbreviation: float = 0.0
    reorder: float = 0.0
    duplicate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name != "seed" and not 0.0 <= getattr(self, f.name) <= 1.0:
                raise ValueError(f"{f.name} probability must be in [0, 1]")

    @classmethod
    def identity(cls, seed: int = 0) -> "CorruptionProfile":
        return cls(seed=seed)

    @classmethod
    def mild(cls, seed: int = 0) -> "CorruptionProfile":
        return cls(0.1, 0.1, 0.1, 0.1, 0.1, 0.1, seed)

    @classmethod
    def uniform(cls, p: float, seed: int = 0) -> "CorruptionProfile":
        return cls(p, p, p, p, p, p, seed)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class TruthSet:
    """corrupted id -> id of the reference record it was derived from."""

    links: dict[int, int]

    def __len__(self) -> int:
        return len(self.links)

    def pairs(self) -> set[tuple[int, int]]:
        return set(self.links.items())

    def save(self, path: PathLike) -> None:
        with _atomic_open(path) as fh:
            fh.write("corrupted_id\treference_id\n")
            for c, r in sorted(self.links.items()):
                fh.write(f"{c}\t{r}\n")

    @classmethod
    def load(cls, path: PathLike) -> "TruthSet":
        links: dict[int, int] = {}
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].split("\t") != ["corrupted_id", "reference_id"]:
            raise DatasetError(f"{path}: expected 'corrupted_id<TAB>reference_id' header")
        for line_no, line in enumerate(lines[1:], 2):
            parts = line.split("\t")
            if len(parts) != 2:
                raise DatasetError(f"{path}: line {line_no}: expected 2 fields")
            c, r = int(parts[0]), int(parts[1])
            if c in links:
                raise DatasetError(f"{path}: line {line_no}: corrupted id {c} listed twice")
            links[c] = r
        return cls(links)


def _variant_table() -> dict[tuple[str, ...], list[tuple[str, ...]]]:
    table: dict[tuple[str, ...], list[tuple[str, ...]]] = {}
    for group in synonym_groups():
        variants = [tuple(v.split()) for v in group]
        for v in variants:
            table[v] = [o for o in variants if o != v]
    return table


_STATE_WORDS = set(_STATES)


def _find_variants(ws: list[str], table) -> list[tuple[int, int]]:
    spans = []
    longest = max(len(k) for k in table)
    for i in range(len(ws)):
        for length in range(longest, 0, -1):
            if tuple(ws[i : i + length]) in table:
                spans.append((i, length))
                break
    return spans


def _typo(ws: list[str], rng: random.Random) -> None:
    choices = [i for i, w in enumerate(ws) if len(w) >= 2]
    if not choices:
        return
    i = rng.choice(choices)
    w = list(ws[i])
    op = rng.choice(("substitute", "transpose", "delete"))
    pos = rng.randrange(len(w))
    if op == "substitute":
        pool = "0123456789" if w[pos].isdigit() else "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
        w[pos] = rng.choice(pool.replace(w[pos], ""))
    elif op == "transpose" and len(w) >= 2:
        pos = min(pos, len(w) - 2)
        w[pos], w[pos + 1] = w[pos + 1], w[pos]
    elif len(w) >= 3:
        del w[pos]
    else:
        return
    ws[i] = "".join(w)


def corrupt_text(text: str, profile: CorruptionProfile, rng: random.Random, table=None) -> str:
    """Apply each corruption at most once, in a fixed order, to one address."""
    table = table if table is not None else _variant_table()
    ws = text.split()
    if rng.random() < profile.drop_postcode:
        if ws and ws[-1].isdigit() and len(ws[-1]) == 4:
            ws.pop()
    if rng.random() < profile.drop_locality:
        states = [i for i, w in enumerate(ws) if w in _STATE_WORDS]
        if states:
            s = states[-1]
            # drop the state itself or the word before it (the suburb)
            target = s if rng.random() < 0.5 or s == 0 else s - 1
            del ws[target]
    if rng.random() < profile.abbreviation:
        spans = _find_variants(ws, table)
        if spans:
            i, length = rng.choice(spans)
            ws[i : i + length] = list(rng.choice(table[tuple(ws[i : i + length])]))
    if rng.random() < profile.typo:
        _typo(ws, rng)
    if rng.random() < profile.duplicate and ws:
        i = rng.randrange(len(ws))
        ws.insert(i + 1, ws[i])
    if rng.random() < profile.reorder and len(ws) >= 2:
        i = rng.randrange(len(ws) - 1)
        ws[i], ws[i + 1] = ws[i + 1], ws[i]
    return " ".join(ws)


def corrupt(
    records: Sequence[AddressRecord], profile: CorruptionProfile, start_id: int = 1
) -> tuple[list[AddressRecord], TruthSet]:
    """Corrupt every record independently; corrupted ids run from ``start_id`` in input order.
    Records no corruption touched keep their raw text.
    """
    rng = random.Random(profile.seed)
    table = _variant_table()
    out = []
    links = {}
    for new_id, rec in enumerate(records, start_id):
        text = corrupt_text(rec.normalized, profile, rng, table)
        out.append(AddressRecord(new_id, rec.raw if text == rec.normalized else text))
        links[new_id] = rec.id
    return out, TruthSet(links)


def arbitrary_scenario(
    seed: int, n: int, overlap: float = 0.7, profile: Optional[CorruptionProfile] = None, **gen_kwargs
) -> tuple[list[AddressRecord], list[AddressRecord], TruthSet]:
    """Two uncurated datasets drawn from one synthetic population.

    ``db1`` holds a corrupted copy of all ``n`` addresses. ``db2`` holds an
    independently corrupted copy of a random ``overlap`` share of them, so
    the rest of ``db1`` has no true counterpart. Truth maps db1 ids to db2 ids.
    """
    profile = profile or CorruptionProfile.mild(seed)
    base = generate_reference(seed, n, **gen_kwargs)
    rng = random.Random(seed + 1)
    kept = sorted(rng.sample(range(n), max(1, round(overlap * n))))
    db1, _ = corrupt(base, profile)
    profile2 = CorruptionProfile(**{**profile.as_dict(), "seed": profile.seed + 1})
    db2, t2 = corrupt([base[i] for i in kept], profile2)
    source_to_db2 = {src: new for new, src in t2.links.items()}
    links = {rec.id: source_to_db2[base[i].id] for i, rec in enumerate(db1) if base[i].id in source_to_db2}
    return db1, db2, TruthSet(links)
