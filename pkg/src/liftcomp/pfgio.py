"""JSON export for parfactor graphs.

Mirrors the ground-model file format: tables are flat lists in row-major
order with the last argument fastest. member_args carries each member's
own argument tuple so the ground model can be reconstructed from the
file alone; crv is null for parfactors without a counted conversion.
"""

from __future__ import annotations

import json

from .acp import Parfactor, ParfactorGraph

__all__ = ["pfg_to_json", "save_pfg"]


def _parfactor_to_json(pf: Parfactor) -> dict:
    crv = None
    if pf.crv is not None:
        crv = {
            "positions": list(pf.crv.positions),
            "histograms": [list(cell) for cell in pf.crv.histograms],
        }
    return {
        "representative": {
            "name": pf.name,
            "args": list(pf.args),
            "table": pf.table.reshape(-1).tolist(),
        },
        "count": pf.count,
        "members": list(pf.members),
        "member_args": [list(args) for args in pf.member_args],
        "crv": crv,
    }


def pfg_to_json(pfg: ParfactorGraph) -> dict:
    return {
        "rv_classes": [
            {
                "representative": {
                    "name": cls.representative.name,
                    "range": list(cls.representative.range),
                },
                "members": list(cls.members),
            }
            for cls in pfg.rv_classes
        ],
        "parfactors": [_parfactor_to_json(pf) for pf in pfg.parfactors],
    }


def save_pfg(pfg: ParfactorGraph) -> bytes:
    return (json.dumps(pfg_to_json(pfg), indent=2) + "\n").encode("utf-8")
