"""JSON-shaped views of domain objects, shared by the CLI and the HTTP
service so both surfaces emit byte-identical structures."""

from __future__ import annotations

from .colorimetry import LabColor, ViewingCondition, lab_to_srgb_hex
from .gamut import AlternativesGrid, GridCell, SurfaceMatch
from .neugebauer import NPac


def lab_to_list(lab: LabColor) -> list:
    return [round(lab.L, 4), round(lab.a, 4), round(lab.b, 4)]


def npac_to_dict(npac: NPac) -> dict:
    return {str(i): round(w, 9) for i, w in npac.entries}


def match_to_dict(match: SurfaceMatch, vc: ViewingCondition) -> dict:
    return {
        "lab": lab_to_list(match.lab),
        "npac": npac_to_dict(match.npac),
        "srgb_hex": lab_to_srgb_hex(match.lab, vc),
        "de_to_target": round(match.de, 4),
        "facet": match.facet,
    }


def cell_to_dict(cell: GridCell, vc: ViewingCondition) -> dict:
    return {
        "hue_offset": cell.hue_offset,
        "lightness_offset": cell.lightness_offset,
        "lab": lab_to_list(cell.lab),
        "srgb_hex": lab_to_srgb_hex(cell.lab, vc),
        "de_to_target": round(cell.de_to_target, 4),
        "npac": npac_to_dict(cell.npac),
    }


def grid_to_dict(grid: AlternativesGrid, vc: ViewingCondition) -> dict:
    return {
        "target_lab": lab_to_list(grid.target),
        "metric": grid.metric_name,
        "n_h": grid.n_h,
        "n_l": grid.n_l,
        "step_h": grid.step_h,
        "step_l": grid.step_l,
        "center": match_to_dict(grid.center, vc),
        "cells": [cell_to_dict(grid.cells[key], vc) for key in sorted(grid.cells)],
        "ragged": [list(key) for key in grid.ragged],
    }
