"""Embedded reference values of tight inequalities (versioned JSON resource)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .core import Scenario

TABLE_IDS = ("main-1", "main-2", "s1", "s2", "s3", "s4", "s5", "s6")


@dataclass(frozen=True)
class ExpectedRow:
    table_id: str
    row: int
    scenario: Scenario
    alpha: tuple[int, ...]
    beta_c: int | None
    delta: float | None
    beta_q: float | None
    facet: bool
    source: str

    @property
    def value_kind(self) -> str:
        return "beta_q" if self.beta_q is not None else "ratio"

    @property
    def value(self) -> float | None:
        return self.beta_q if self.beta_q is not None else self.delta


@lru_cache(maxsize=1)
def _document() -> dict:
    text = resources.files("belltight").joinpath("data/expected_tables.json").read_text()
    return json.loads(text)


def _row(raw: dict) -> ExpectedRow:
    return ExpectedRow(
        table_id=raw["table_id"],
        row=raw["row"],
        scenario=Scenario(raw["n_parties"], raw["n_settings"]),
        alpha=tuple(raw["alpha"]),
        beta_c=raw["beta_c"],
        delta=raw["delta"],
        beta_q=raw["beta_q"],
        facet=raw["facet"],
        source=raw["source"],
    )


def expected_rows(table_id: str) -> list[ExpectedRow]:
    doc = _document()
    if table_id == "stretch":
        return [_row(r) for r in doc["stretch"]]
    if table_id not in doc["tables"]:
        raise KeyError(f"unknown table id {table_id!r}; choose from {', '.join(TABLE_IDS)}")
    return [_row(r) for r in doc["tables"][table_id]]


def family_generators(kind: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    fam = _document()["families"]
    if kind not in fam:
        raise KeyError(f"unknown family {kind!r}; choose m2 or m3")
    return tuple(fam[kind]["alpha1"]), tuple(fam[kind]["alpha2"])


def data_version() -> int:
    return int(_document()["version"])
