"""Material properties and the radiation-length registry.

Radiation lengths use the closed-form approximation

    X0 [g/cm2] = 716.4 * A / (Z * (Z + 1) * ln(287 / sqrt(Z)))

divided by bulk density to give a length, and Bragg additivity
(1/X0 = sum w_j / X0_j over mass fractions) for mixtures.  Values land
within ~1% of tabulated ones, which is all the scattering model needs.

The registry is a plain text file shipped with the package
(``data/materials.txt``); an alternative file can be loaded at startup.
Registries and materials are immutable once built.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources

__all__ = [
    "CLASS_LABELS",
    "Material",
    "Registry",
    "load_registry",
    "lookup",
    "radiation_length_element",
    "radiation_length_mixture",
]

# Allowed class labels, in label-volume index order.
CLASS_LABELS = ("concrete", "rebar", "tendon_duct", "air_void", "unknown")

# Z and standard atomic weight for every element the registry may reference.
ELEMENTS = {
    "H": (1, 1.008),
    "C": (6, 12.011),
    "N": (7, 14.007),
    "O": (8, 15.999),
    "Na": (11, 22.990),
    "Mg": (12, 24.305),
    "Al": (13, 26.982),
    "Si": (14, 28.085),
    "Ar": (18, 39.948),
    "K": (19, 39.098),
    "Ca": (20, 40.078),
    "Fe": (26, 55.845),
    "Pb": (82, 207.2),
    "U": (92, 238.029),
}


@dataclass(frozen=True)
class Material:
    """A bulk material as seen by the scattering model.

    Attributes
    ----------
    name : str
        Registry key.
    density : float
        Bulk density in g/cm3.
    radiation_length : float
        X0 in mm at the given density.
    class_label : str
        One of ``CLASS_LABELS``; drives ground-truth label volumes.
    """

    name: str
    density: float
    radiation_length: float
    class_label: str

    def __post_init__(self) -> None:
        if self.density <= 0.0:
            raise ValueError(f"material {self.name!r}: density must be positive")
        if self.radiation_length <= 0.0:
            raise ValueError(f"material {self.name!r}: radiation length must be positive")
        if self.class_label not in CLASS_LABELS:
            raise ValueError(f"material {self.name!r}: unknown class label {self.class_label!r}")

    @property
    def class_index(self) -> int:
        return CLASS_LABELS.index(self.class_label)


def _x0_mass(z: int, a: float) -> float:
    """Radiation length in g/cm2 for a single element."""
    return 716.4 * a / (z * (z + 1) * math.log(287.0 / math.sqrt(z)))


def radiation_length_element(z: int, a: float, density: float) -> float:
    """X0 in mm for a pure element at the given bulk density (g/cm3).

    Examples: iron at 7.874 g/cm3 -> 17.96 mm; at rebar density
    7.84 g/cm3 -> 18.04 mm.
    """
    if z < 1 or a <= 0.0 or density <= 0.0:
        raise ValueError("Z, A and density must all be positive")
    return _x0_mass(z, a) / density * 10.0  # cm -> mm


def radiation_length_mixture(fractions: dict[str, float], density: float) -> float:
    """X0 in mm for a mixture given element mass fractions (must sum to 1).

    Bragg additivity on mass thickness: 1/X0 = sum_j w_j / X0_j.
    """
    if density <= 0.0:
        raise ValueError("density must be positive")
    if not fractions:
        raise ValueError("mixture needs at least one component")
    total = math.fsum(fractions.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"mass fractions sum to {total!r}, expected 1 within 1e-9")
    inv = 0.0
    for symbol, weight in fractions.items():
        if symbol not in ELEMENTS:
            raise ValueError(f"unknown element symbol {symbol!r}")
        if weight < 0.0:
            raise ValueError(f"negative mass fraction for {symbol!r}")
        z, a = ELEMENTS[symbol]
        inv += weight / _x0_mass(z, a)
    return (1.0 / inv) / density * 10.0


class Registry:
    """Immutable name -> Material mapping loaded from a registry file."""

    def __init__(self, materials: dict[str, Material]):
        self._materials = dict(materials)

    def __contains__(self, name: str) -> bool:
        return name in self._materials

    def __iter__(self):
        return iter(self._materials.values())

    def names(self) -> tuple[str, ...]:
        return tuple(self._materials)

    def get(self, name: str) -> Material:
        try:
            return self._materials[name]
        except KeyError:
            raise KeyError(f"material {name!r} not in registry (have: {', '.join(self._materials)})") from None


def _parse_composition(text: str) -> dict[str, float]:
    fractions: dict[str, float] = {}
    for token in text.split():
        symbol, _, frac = token.partition(":")
        if not frac:
            raise ValueError(f"malformed composition entry {token!r}")
        fractions[symbol] = float(frac)
    return fractions


def load_registry(path: str | None = None) -> Registry:
    """Load a registry file; ``None`` loads the packaged default."""
    parser = configparser.ConfigParser(interpolation=None)
    if path is None:
        text = resources.files("muotomo").joinpath("data/materials.txt").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    parser.read_string(text)

    materials: dict[str, Material] = {}
    for name in parser.sections():
        section = parser[name]
        density = float(section["density"])
        class_label = section["class"].strip()
        if "x0_mm" in section:
            x0 = float(section["x0_mm"])
        elif "composition" in section:
            x0 = radiation_length_mixture(_parse_composition(section["composition"]), density)
        else:
            raise ValueError(f"material {name!r}: need composition or x0_mm")
        materials[name] = Material(name, density, x0, class_label)
    return Registry(materials)


_DEFAULT: Registry | None = None


def default_registry() -> Registry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_registry()
    return _DEFAULT


def lookup(name: str, registry: Registry | None = None) -> Material:
    """Fetch a material by name from the given (or default) registry."""
    return (registry or default_registry()).get(name)
