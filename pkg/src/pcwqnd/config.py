"""Flat ``key.path = value`` configuration files with unit-suffixed keys.

    # comment
    material.n2_cm2_per_W = 1.5e-13
    signal.wavelength_nm  = 1550
    signal.state          = number
    modes.files           = band0.txt, band1.txt

Quantities are looked up by base name (``signal.wavelength``) and the unit is
read from the key suffix, so ``signal.wavelength_nm`` and
``signal.wavelength_um`` are both accepted. Every diagnostic carries the file
name and line number.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .core import UnitError, to_si, unit_dimension

_LINE = re.compile(r"^([A-Za-z_][\w]*(?:\.[\w]+)*)\s*=\s*(.*?)\s*$")

# key suffix -> unit tag
SUFFIX_UNITS = {
    "m": "m", "cm": "cm", "mm": "mm", "um": "um", "nm": "nm",
    "m2": "m2", "um2": "um2", "nm2": "nm2",
    "s": "s", "ns": "ns", "ps": "ps", "fs": "fs",
    "J": "J", "kJ": "kJ", "mJ": "mJ", "uJ": "uJ", "nJ": "nJ", "pJ": "pJ",
    "m2_per_W": "m2/W", "cm2_per_W": "cm2/W",
    "per_m": "1/m", "per_cm": "1/cm", "per_mm": "1/mm", "per_um": "1/um",
    "m_per_W": "m/W", "cm_per_W": "cm/W", "cm_per_GW": "cm/GW",
    "W_per_m2": "W/m2", "W_per_cm2": "W/cm2", "GW_per_cm2": "GW/cm2",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Entry:
    raw: str
    line: int


class Config:
    """Parsed flat config; remembers which keys were consumed."""

    def __init__(self, entries: dict[str, Entry], path: Path | None = None):
        self.entries = entries
        self.path = path
        self.used: set[str] = set()

    @property
    def base_dir(self) -> Path:
        return self.path.parent if self.path is not None else Path.cwd()

    def _where(self, key: str) -> str:
        name = str(self.path) if self.path else "<config>"
        e = self.entries.get(key)
        return f"{name}:{e.line}" if e else name

    def error(self, key: str, msg: str) -> ConfigError:
        return ConfigError(f"{self._where(key)}: {key}: {msg}")

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def has_quantity(self, base: str) -> bool:
        return self._quantity_key(base) is not None

    def keys(self):
        return self.entries.keys()

    def set(self, key: str, raw: str) -> None:
        line = self.entries[key].line if key in self.entries else 0
        self.entries[key] = Entry(raw, line)

    def copy(self) -> "Config":
        """Independent entries; key usage is still recorded on the original."""
        dup = Config(dict(self.entries), self.path)
        dup.used = self.used
        return dup

    def _raw(self, key: str, required: bool):
        if key not in self.entries:
            if required:
                raise ConfigError(f"{self._where(key)}: missing required key {key!r}")
            return None
        self.used.add(key)
        return self.entries[key].raw

    def get_str(self, key: str, default: str | None = None, choices=None) -> str:
        raw = self._raw(key, default is None)
        value = default if raw is None else raw
        if choices is not None and value not in choices:
            raise self.error(key, f"expected one of {', '.join(choices)}, got {value!r}")
        return value

    def get_float(self, key: str, default: float | None = None) -> float:
        raw = self._raw(key, default is None)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise self.error(key, f"expected a number, got {raw!r}") from None

    def get_int(self, key: str, default: int | None = None) -> int:
        raw = self._raw(key, default is None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise self.error(key, f"expected an integer, got {raw!r}") from None

    def get_bool(self, key: str, default: bool | None = None) -> bool:
        raw = self._raw(key, default is None)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise self.error(key, f"expected true/false, got {raw!r}")

    def get_list(self, key: str, default: list[str] | None = None) -> list[str]:
        raw = self._raw(key, default is None)
        if raw is None:
            return list(default)
        return [item.strip() for item in raw.split(",") if item.strip()]

    def get_path(self, key: str) -> Path:
        p = Path(self.get_str(key))
        return p if p.is_absolute() else self.base_dir / p

    def _quantity_key(self, base: str) -> str | None:
        found = [
            k for k in self.entries
            if k.startswith(base + "_") and k[len(base) + 1:] in SUFFIX_UNITS
        ]
        if len(found) > 1:
            lines = ", ".join(self._where(k) for k in sorted(found))
            raise ConfigError(f"{base}: given more than once ({lines})")
        return found[0] if found else None

    def get_quantity(self, base: str, dimension: str, default: float | None = None) -> float:
        """SI value of ``base_<unit>``; the unit must have ``dimension``."""
        key = self._quantity_key(base)
        if key is None:
            if default is not None:
                return default
            raise ConfigError(
                f"{self._where(base)}: missing required quantity {base!r} "
                f"(write it as {base}_<unit>, e.g. a {dimension} unit)"
            )
        unit = SUFFIX_UNITS[key[len(base) + 1:]]
        try:
            if unit_dimension(unit) != dimension:
                raise self.error(key, f"unit {unit!r} is not a {dimension} unit")
            return to_si(self.get_float(key), unit)
        except UnitError as exc:
            raise self.error(key, str(exc)) from None

    def unused(self) -> list[str]:
        return sorted(set(self.entries) - self.used)


def parse_config_text(text: str, path: Path | None = None) -> Config:
    entries: dict[str, Entry] = {}
    name = str(path) if path else "<config>"
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        m = _LINE.match(stripped)
        if not m:
            raise ConfigError(f"{name}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = m.group(1), m.group(2)
        if not value:
            raise ConfigError(f"{name}:{lineno}: {key}: empty value")
        if key in entries:
            raise ConfigError(
                f"{name}:{lineno}: {key}: duplicate key (first set on line {entries[key].line})"
            )
        entries[key] = Entry(value, lineno)
    if not entries:
        raise ConfigError(f"{name}: config is empty")
    return Config(entries, path)


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config_text(text, path)
