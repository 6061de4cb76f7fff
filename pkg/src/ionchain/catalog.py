"""Ion species/transition data files.

The physical inputs that are not derivable from first principles (ion
masses, transition wavelengths and lifetimes) live in JSON catalog files
so they stay user-editable and carry their own provenance.  The shipped
files hold commonly used even-isotope ions with literature-class values;
they are reference data to be verified against a primary source before
quantitative use, and every transition record must say where its numbers
came from.

Schema (version 1)::

    {
      "schema_version": 1,
      "species": [
        {
          "name": "Ca-40+",
          "mass_kg": 6.64e-26,
          "ionization_degree": 1,
          "nuclear_spin": 0,
          "transitions": [
            {
              "label": "S1/2-D5/2",
              "multipole": "E2",
              "wavelength_m": 7.29e-07,
              "lifetime_s": 1.05,
              "lower_term": "4s 2S1/2",
              "upper_term": "3d 2D5/2",
              "provenance": "..."
            }
          ]
        }
      ]
    }

Unit-bearing field names carry the unit suffix on purpose.
"""

import json
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path

from .angular import HalfInteger
from .transitions import Multipole, TransitionSpec

SCHEMA_VERSION = 1

_TERM_J = re.compile(r"([0-9]+(?:/[0-9]+)?)\s*$")


class CatalogError(ValueError):
    """Catalog file failed to parse or validate; message says where."""


def term_angular_momentum(term: str) -> HalfInteger:
    """Total angular momentum J parsed from a term designation.

    Accepts designations like '4s 2S1/2', '3d 2D5/2' or plain 'P2': the
    trailing integer or fraction is J.
    """
    match = _TERM_J.search(term.strip())
    if not match:
        raise CatalogError(f"cannot read J from term designation {term!r}")
    return HalfInteger.coerce(match.group(1))


@dataclass(frozen=True)
class TransitionRecord:
    """One tabulated transition of a species.

    ``lifetime_s`` is the upper-level lifetime; its reciprocal is the
    Einstein A coefficient.  ``provenance`` must be non-empty: data files
    are only as good as their citations.
    """

    label: str
    multipole: Multipole
    wavelength_m: float
    lifetime_s: float
    lower_term: str
    upper_term: str
    provenance: str

    def __post_init__(self):
        object.__setattr__(self, "multipole", Multipole.coerce(self.multipole))
        if not self.wavelength_m > 0.0:
            raise CatalogError(f"transition {self.label!r}: wavelength_m must be positive")
        if not self.lifetime_s > 0.0:
            raise CatalogError(f"transition {self.label!r}: lifetime_s must be positive")
        if not str(self.provenance).strip():
            raise CatalogError(f"transition {self.label!r}: provenance must be non-empty")
        # fail early if the term designations are unreadable
        term_angular_momentum(self.lower_term)
        term_angular_momentum(self.upper_term)

    @property
    def einstein_A(self) -> float:
        return 1.0 / self.lifetime_s

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength_m

    @property
    def lower_j(self) -> HalfInteger:
        return term_angular_momentum(self.lower_term)

    @property
    def upper_j(self) -> HalfInteger:
        return term_angular_momentum(self.upper_term)


@dataclass(frozen=True)
class IonSpecies:
    name: str
    mass_kg: float
    ionization_degree: int
    nuclear_spin: HalfInteger
    transitions: tuple

    def __post_init__(self):
        if not self.mass_kg > 0.0:
            raise CatalogError(f"species {self.name!r}: mass_kg must be positive")
        if not (isinstance(self.ionization_degree, int)
                and self.ionization_degree >= 1):
            raise CatalogError(f"species {self.name!r}: ionization_degree must be >= 1")
        object.__setattr__(self, "nuclear_spin",
                           HalfInteger.coerce(self.nuclear_spin))
        object.__setattr__(self, "transitions", tuple(self.transitions))

    def transition(self, label: str) -> TransitionRecord:
        for rec in self.transitions:
            if rec.label == label:
                return rec
        raise KeyError(f"species {self.name!r} has no transition {label!r}")


def _record_from_dict(data: dict, where: str) -> TransitionRecord:
    required = ("label", "multipole", "wavelength_m", "lifetime_s",
                "lower_term", "upper_term", "provenance")
    missing = [k for k in required if k not in data]
    if missing:
        raise CatalogError(f"{where}: missing fields {missing}")
    return TransitionRecord(**{k: data[k] for k in required})


def _species_from_dict(data: dict, where: str) -> IonSpecies:
    required = ("name", "mass_kg", "ionization_degree", "nuclear_spin",
                "transitions")
    missing = [k for k in required if k not in data]
    if missing:
        raise CatalogError(f"{where}: missing fields {missing}")
    name = data["name"]
    transitions = tuple(
        _record_from_dict(t, f"{where} species {name!r} transition {i}")
        for i, t in enumerate(data["transitions"]))
    return IonSpecies(name=name, mass_kg=data["mass_kg"],
                      ionization_degree=data["ionization_degree"],
                      nuclear_spin=data["nuclear_spin"],
                      transitions=transitions)


def load_catalog(path) -> list:
    """Load and validate a species catalog; returns a list of IonSpecies.

    Parse errors and invariant violations raise :class:`CatalogError`
    naming the file and the offending entry.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: invalid JSON at line {exc.lineno}, "
                           f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise CatalogError(f"{path}: top level must be an object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise CatalogError(f"{path}: unsupported schema_version {version!r} "
                           f"(expected {SCHEMA_VERSION})")
    species = raw.get("species", [])
    if not isinstance(species, list):
        raise CatalogError(f"{path}: 'species' must be a list")
    return [_species_from_dict(s, str(path)) for s in species]


def dump_catalog(species_list, path=None) -> str:
    """Serialize species back to schema-version-1 JSON.

    Round-trips what :func:`load_catalog` read.  Writes to ``path`` when
    given; always returns the JSON text.
    """
    doc = {"schema_version": SCHEMA_VERSION, "species": []}
    for sp in species_list:
        entry = asdict(sp)
        entry["nuclear_spin"] = (sp.nuclear_spin.doubled / 2
                                 if sp.nuclear_spin.doubled % 2
                                 else sp.nuclear_spin.doubled // 2)
        entry["transitions"] = []
        for rec in sp.transitions:
            rec_d = asdict(rec)
            rec_d["multipole"] = rec.multipole.value
            entry["transitions"].append(rec_d)
        doc["species"].append(entry)
    text = json.dumps(doc, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def builtin_catalog_path() -> Path:
    """Directory holding the catalogs shipped with the package."""
    return Path(__file__).parent / "data" / "species"


def to_transition_spec(record: TransitionRecord, lower_m, upper_m
                       ) -> TransitionSpec:
    """Bridge a catalog record to a concrete sublevel pair.

    The magnetic quantum numbers are checked against the J values parsed
    from the record's term designations.
    """
    return TransitionSpec(
        multipole=record.multipole,
        lower_j=record.lower_j,
        lower_m=lower_m,
        upper_j=record.upper_j,
        upper_m=upper_m,
        einstein_A=record.einstein_A,
        wavenumber=record.wavenumber,
    )
