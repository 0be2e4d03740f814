"""Named systems and the inline system syntax used by the CLI and configs.

Inline form: ``key=value`` items separated by ';', for example
``family=cosine;amplitude=0.03125;wave=1,0;matrix=3,1,2,1;p=0.5,0;q=0,0``.
``kind=endo`` (with ``degree``) gives a cylinder endomorphism instead.
"""

from __future__ import annotations

from .basins import KanEndomorphism, kan_endo
from .errors import ConfigError
from .families import ConstantFamily, CosineFamily
from .skew import KAN_MATRIX, build_system, kan_diffeo

REGISTRY = {"kan-diffeo": kan_diffeo, "kan-endo": kan_endo}

_KEYS = {"kind", "family", "amplitude", "wave", "matrix", "p", "q", "degree", "name"}


def _nums(text, conv, n):
    vals = [conv(v) for v in text.replace(":", ",").split(",") if v.strip()]
    if len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def parse_system(spec):
    """Preset name or inline spec -> KanSystem / KanEndomorphism."""
    spec = spec.strip()
    if spec in REGISTRY:
        return REGISTRY[spec]()
    if "=" not in spec:
        raise ConfigError(f"unknown system {spec!r}; presets: {', '.join(sorted(REGISTRY))}")
    items = {}
    for part in spec.split(";"):
        if not part.strip():
            continue
        key, _, val = part.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown system key {key!r}")
        items[key] = val.strip()
    try:
        amp = float(items.get("amplitude", 1.0 / 32.0))
        fam_name = items.get("family", "cosine")
        if fam_name == "cosine":
            wave = _nums(items.get("wave", "1,0"), int, 2)
            family = CosineFamily(amp, tuple(wave))
        elif fam_name == "constant":
            family = ConstantFamily(amp)
        else:
            raise ConfigError(f"unknown family {fam_name!r}")
        if items.get("kind", "diffeo") == "endo":
            return KanEndomorphism(int(items.get("degree", 3)), family)
        m = _nums(items.get("matrix", "3,1,2,1"), int, 4) if "matrix" in items else \
            [v for row in KAN_MATRIX for v in row]
        p = _nums(items.get("p", "0.5,0"), float, 2)
        q = _nums(items.get("q", "0,0"), float, 2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return build_system(((m[0], m[1]), (m[2], m[3])), family, tuple(p), tuple(q),
                        name=items.get("name", "inline"))
