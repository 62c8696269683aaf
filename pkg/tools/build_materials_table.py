"""Regenerate src/phxmem/data/materials.json.

Silicon and silica come from published dispersion formulas evaluated on an
11-point grid across 1500-1600 nm. The PCM tables are representative
values at 1550 nm from published ellipsometry, extended across the band
with a linear slope; they are not pointwise digitizations.

    python tools/build_materials_table.py
"""

import json
import math
from pathlib import Path

WAVELENGTHS = [1500.0 + 10.0 * i for i in range(11)]
OUT = Path(__file__).resolve().parents[1] / "src" / "phxmem" / "data" / "materials.json"


def silica(wl_nm):
    # Malitson (1965) three-term Sellmeier, fused silica, 20 C.
    lam2 = (wl_nm * 1e-3) ** 2
    terms = [(0.6961663, 0.0684043), (0.4079426, 0.1162414), (0.8974794, 9.896161)]
    n2 = 1.0 + sum(b * lam2 / (lam2 - c * c) for b, c in terms)
    return math.sqrt(n2)


def silicon(wl_nm):
    # Li (1980) room-temperature fit for crystalline silicon.
    lam = wl_nm * 1e-3
    lam1 = 1.1071
    n2 = 11.6858 + 0.939816 / lam**2 + 0.00810461 * lam1**2 / (lam**2 - lam1**2)
    return math.sqrt(n2)


def linear(v1550, slope_per_nm):
    return lambda wl: v1550 + slope_per_nm * (wl - 1550.0)


def table(n_fn, k_fn, source):
    rows = []
    for wl in WAVELENGTHS:
        rows.append(
            {
                "wl_nm": wl,
                "n": round(n_fn(wl), 6),
                "k": round(max(k_fn(wl), 0.0), 7),
                "source": source,
            }
        )
    return rows


PCM_SOURCES = {
    "GST": "representative Ge2Sb2Te5 ellipsometry (Rios 2015 / Zheng 2020 range); linear band slope",
    "GSST": "representative Ge2Sb2Se4Te1 ellipsometry (Zhang 2019); linear band slope",
    "Sb2Se3": "representative Sb2Se3 ellipsometry (Delaney 2020); crystalline k set at detection floor",
}


def build():
    materials = []
    materials.append(
        {
            "name": "GST",
            "kind": "pcm",
            "phases": {
                "amorphous": table(linear(3.94, -4.0e-4), linear(0.045, -1.0e-4), PCM_SOURCES["GST"]),
                "crystalline": table(linear(6.11, -1.3e-3), linear(0.83, -1.2e-3), PCM_SOURCES["GST"]),
            },
            "T_g_K": 453.0,
            "T_l_K": 890.0,
            "thermal": {
                "k_W_mK": {"amorphous": 0.19, "crystalline": 0.57},
                "rho_kg_m3": 6150.0,
                "cp_J_kgK": 210.0,
            },
            "provenance": "T_g/T_l: reported design values; thermal: GST literature (fcc phase for crystalline k)",
        }
    )
    materials.append(
        {
            "name": "GSST",
            "kind": "pcm",
            "phases": {
                "amorphous": table(linear(3.33, -3.0e-4), linear(1.0e-4, -5.0e-7), PCM_SOURCES["GSST"]),
                "crystalline": table(linear(5.08, -8.0e-4), linear(0.35, -5.0e-4), PCM_SOURCES["GSST"]),
            },
            "T_g_K": 423.0,
            "T_l_K": 900.0,
            "thermal": {
                "k_W_mK": {"amorphous": 0.19, "crystalline": 0.57},
                "rho_kg_m3": 6150.0,
                "cp_J_kgK": 210.0,
            },
            "provenance": "T_g/T_l: reported design values; thermal: GST values adopted (GSST data scarce)",
        }
    )
    materials.append(
        {
            "name": "Sb2Se3",
            "kind": "pcm",
            "phases": {
                "amorphous": table(linear(3.285, -1.0e-4), linear(0.0, 0.0), PCM_SOURCES["Sb2Se3"]),
                "crystalline": table(linear(4.05, -2.0e-4), linear(1.0e-5, 0.0), PCM_SOURCES["Sb2Se3"]),
            },
            "T_g_K": 453.0,
            "T_l_K": 885.0,
            "thermal": {
                "k_W_mK": {"amorphous": 0.36, "crystalline": 0.36},
                "rho_kg_m3": 5840.0,
                "cp_J_kgK": 250.0,
            },
            "provenance": "transition temperatures and thermal constants: approximate literature values",
        }
    )
    materials.append(
        {
            "name": "Si",
            "kind": "passive",
            "phases": {"single": table(silicon, lambda wl: 0.0, "Li 1980 dispersion formula")},
            "thermal": {"k_W_mK": 148.0, "rho_kg_m3": 2329.0, "cp_J_kgK": 700.0},
            "provenance": "bulk crystalline silicon",
        }
    )
    materials.append(
        {
            "name": "SiO2",
            "kind": "passive",
            "phases": {"single": table(silica, lambda wl: 0.0, "Malitson 1965 Sellmeier")},
            "thermal": {"k_W_mK": 1.38, "rho_kg_m3": 2203.0, "cp_J_kgK": 745.0},
            "provenance": "fused silica",
        }
    )
    materials.append(
        {
            "name": "TiTiN",
            "kind": "passive",
            "phases": {
                "single": table(linear(2.0, 1.0e-3), linear(6.0, 4.0e-3), "approximate TiN metallic response; heater is excluded from optical solves")
            },
            "thermal": {"k_W_mK": 20.0, "rho_kg_m3": 5000.0, "cp_J_kgK": 580.0},
            "melt_K": 1941.0,
            "provenance": "Ti/TiN bilayer heater; thin-film thermal constants approximate",
        }
    )
    return {"version": 1, "materials": materials}


if __name__ == "__main__":
    OUT.write_text(json.dumps(build(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")
