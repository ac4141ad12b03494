"""Species/week class taxonomy and the canonical label naming convention.

A class is a (species, week) pair named ``<CODE>_week_<N>`` where CODE is a
5-letter uppercase species identifier and N is an unpadded week number in
1..11 (e.g. ``AMBEL_week_8``). The built-in taxonomy covers 16 greenhouse
weed species tracked over an 11-week growth cycle; SORHA has no week-1/2
classes because it emerged late, giving 174 classes in total.

Custom species sets can be loaded from a plain-text config file, one species
per line::

    # code | scientific name | common name | family | weeks [| aliases]
    ABUTH | Abutilon theophrasti Medik. | Velvetleaf | Malvaceae | 1-11
    SORHA | Sorghum halepense (L.) Pers. | Johnson Grass | Poaceae | 3-11

The weeks field is a comma-separated list of week numbers and ``lo-hi``
ranges. The optional aliases field lists alternate codes accepted by
``parse_label`` (the default taxonomy maps AMATA to AMATU this way).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

WEEK_MIN = 1
WEEK_MAX = 11

_CODE_RE = re.compile(r"^[A-Z]{5}$")
_LABEL_RE = re.compile(r"^([A-Z]{5})_week_([1-9][0-9]*)$")


class TaxonomyError(ValueError):
    """Base class for taxonomy construction and label parsing errors."""


class MalformedLabel(TaxonomyError):
    """Label text does not have the ``<CODE>_week_<N>`` shape."""


class UnknownSpecies(TaxonomyError):
    """Species code is not part of the taxonomy."""


class InactiveWeek(TaxonomyError):
    """Week is outside the species' active growth weeks."""


@dataclass(frozen=True)
class SpeciesCode:
    """One species: 5-letter code, names, family, and active growth weeks."""

    code: str
    scientific_name: str
    common_name: str
    family: str
    active_weeks: frozenset[int]

    def __post_init__(self) -> None:
        if not _CODE_RE.match(self.code):
            raise TaxonomyError(f"species code must be 5 uppercase letters, got {self.code!r}")
        object.__setattr__(self, "active_weeks", frozenset(self.active_weeks))
        if not self.active_weeks:
            raise TaxonomyError(f"{self.code}: active_weeks must be non-empty")
        if not all(WEEK_MIN <= w <= WEEK_MAX for w in self.active_weeks):
            raise TaxonomyError(f"{self.code}: weeks must lie in {WEEK_MIN}..{WEEK_MAX}")


@dataclass(frozen=True)
class ClassLabel:
    """A (species, week) detection class."""

    species: SpeciesCode
    week: int

    def __post_init__(self) -> None:
        if self.week not in self.species.active_weeks:
            raise InactiveWeek(f"{self.species.code} has no week {self.week}")

    @property
    def canonical(self) -> str:
        return f"{self.species.code}_week_{self.week}"

    def __str__(self) -> str:
        return self.canonical


class Taxonomy:
    """Ordered species set with a dense, stable class-id mapping.

    Class ids are assigned species-major (in list order), weeks ascending
    within a species, so two builds from the same config always agree.
    """

    def __init__(self, species_list: list[SpeciesCode], aliases: dict[str, str] | None = None):
        if not species_list:
            raise TaxonomyError("taxonomy needs at least one species")
        codes = [s.code for s in species_list]
        if len(set(codes)) != len(codes):
            raise TaxonomyError("duplicate species codes")
        self.species_list: tuple[SpeciesCode, ...] = tuple(species_list)
        self._by_code: dict[str, SpeciesCode] = {s.code: s for s in self.species_list}
        self.aliases: dict[str, str] = dict(aliases or {})
        for alias, target in self.aliases.items():
            if not _CODE_RE.match(alias):
                raise TaxonomyError(f"alias must be 5 uppercase letters, got {alias!r}")
            if alias in self._by_code:
                raise TaxonomyError(f"alias {alias} collides with a species code")
            if target not in self._by_code:
                raise TaxonomyError(f"alias {alias} points at unknown species {target}")
        self._labels: tuple[ClassLabel, ...] = tuple(
            ClassLabel(s, w) for s in self.species_list for w in sorted(s.active_weeks)
        )
        self._id_by_label: dict[ClassLabel, int] = {lab: i for i, lab in enumerate(self._labels)}

    def __len__(self) -> int:
        return len(self._labels)

    @property
    def labels(self) -> tuple[ClassLabel, ...]:
        """All class labels in id order."""
        return self._labels

    def species(self, code: str) -> SpeciesCode:
        resolved = self.aliases.get(code, code)
        try:
            return self._by_code[resolved]
        except KeyError:
            raise UnknownSpecies(f"unknown species code {code!r}") from None

    def has_species(self, code: str) -> bool:
        return self.aliases.get(code, code) in self._by_code

    def class_id(self, label: ClassLabel) -> int:
        return self._id_by_label[label]

    def label_of(self, class_id: int) -> ClassLabel:
        return self._labels[class_id]

    def label(self, code: str, week: int) -> ClassLabel:
        """Build a ClassLabel, resolving aliases and checking the week."""
        return ClassLabel(self.species(code), week)


def parse_label(text: str, taxonomy: Taxonomy) -> ClassLabel:
    """Parse a canonical ``<CODE>_week_<N>`` label against a taxonomy.

    Alias codes are accepted and resolved, so the returned label's canonical
    form may differ from the input (AMATA_week_3 parses to AMATU week 3).
    Raises MalformedLabel, UnknownSpecies or InactiveWeek.
    """
    m = _LABEL_RE.match(text)
    if not m:
        raise MalformedLabel(f"label {text!r} is not of the form CODE_week_N")
    code, week = m.group(1), int(m.group(2))
    if week > WEEK_MAX:
        raise MalformedLabel(f"label {text!r}: week {week} out of range")
    return taxonomy.label(code, week)


# Species table for the built-in taxonomy: code, scientific name, common
# name, family, active weeks. SORHA emerged in week 3.
_ALL_WEEKS = frozenset(range(WEEK_MIN, WEEK_MAX + 1))

_DEFAULT_SPECIES: tuple[tuple[str, str, str, str, frozenset[int]], ...] = (
    ("ABUTH", "Abutilon theophrasti Medik.", "Velvetleaf", "Malvaceae", _ALL_WEEKS),
    ("AMAPA", "Amaranthus palmeri S. Watson.", "Palmer Amaranth", "Amaranthaceae", _ALL_WEEKS),
    ("AMARE", "Amaranthus retroflexus L.", "Redroot Pigweed", "Amaranthaceae", _ALL_WEEKS),
    ("AMATU", "Amaranthus tuberculatus (Moq.) Sauer.", "Water Hemp", "Amaranthaceae", _ALL_WEEKS),
    ("AMBEL", "Ambrosia artemisiifolia L.", "Common Ragweed", "Asteraceae", _ALL_WEEKS),
    ("CHEAL", "Chenopodium album L.", "Common Lambsquarter", "Chenopodiaceae", _ALL_WEEKS),
    ("CYPES", "Cyperus esculentus L.", "Yellow Nutsedge", "Cyperaceae", _ALL_WEEKS),
    ("DIGSA", "Digitaria sanguinalis (L.) Scop.", "Large Crabgrass", "Poaceae", _ALL_WEEKS),
    ("ECHCG", "Echinochloa crus-galli (L.) P. Beauv.", "Barnyard Grass", "Poaceae", _ALL_WEEKS),
    ("ERICA", "Erigeron canadensis L.", "Horse Weed", "Asteraceae", _ALL_WEEKS),
    ("PANDI", "Panicum dichotomiflorum Michx.", "Full Panicum", "Poaceae", _ALL_WEEKS),
    ("SETFA", "Setaria faberi Herrm.", "Giant Foxtail", "Poaceae", _ALL_WEEKS),
    ("SETPU", "Setaria pumila (Poir.) Roem.", "Yellow Foxtail", "Poaceae", _ALL_WEEKS),
    ("SIDSP", "Sida spinosa L.", "Prickly Sida", "Malvaceae", _ALL_WEEKS),
    ("SORHA", "Sorghum halepense (L.) Pers.", "Johnson Grass", "Poaceae", frozenset(range(3, WEEK_MAX + 1))),
    ("SORVU", "Sorghum bicolor (L.) Moench.", "Shatter Cane", "Poaceae", _ALL_WEEKS),
)

# AMATA circulates as an alternate code for Amaranthus tuberculatus.
_DEFAULT_ALIASES = {"AMATA": "AMATU"}


def build_default_taxonomy() -> Taxonomy:
    """The built-in 16-species taxonomy (174 classes)."""
    species = [SpeciesCode(*row) for row in _DEFAULT_SPECIES]
    return Taxonomy(species, aliases=_DEFAULT_ALIASES)


def _parse_weeks(text: str) -> frozenset[int]:
    weeks: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo_s, hi_s = part.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if lo > hi:
                raise TaxonomyError(f"bad week range {part!r}")
            weeks.update(range(lo, hi + 1))
        else:
            weeks.add(int(part))
    return frozenset(weeks)


def parse_taxonomy_config(text: str) -> Taxonomy:
    """Parse the pipe-separated taxonomy config format (see module docstring)."""
    species: list[SpeciesCode] = []
    aliases: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split("|")]
        if len(fields) not in (5, 6):
            raise TaxonomyError(f"line {lineno}: expected 5 or 6 pipe-separated fields")
        code, sci, common, family, weeks_s = fields[:5]
        try:
            weeks = _parse_weeks(weeks_s)
        except ValueError as exc:
            raise TaxonomyError(f"line {lineno}: bad weeks field {weeks_s!r}") from exc
        species.append(SpeciesCode(code, sci, common, family, weeks))
        if len(fields) == 6 and fields[5]:
            for alias in fields[5].split(","):
                aliases[alias.strip()] = code
    return Taxonomy(species, aliases=aliases)


def load_taxonomy(path: str | Path) -> Taxonomy:
    return parse_taxonomy_config(Path(path).read_text(encoding="utf-8"))
