"""In-memory store of elementary data units and aggregation to model scale.

Raw measurements are kept at the finest resolution used anywhere in the
toolkit: 1 cm length bins, monthly time cells, one spatial subdivision per
cell. Everything a model consumes is a simple sum of these cells, so a
bootstrap draw of subdivisions (with repeats) is just a weighted sum.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SOURCES = ("com", "smar", "soct")
SURVEY_SOURCES = ("smar", "soct")

# payload kinds a DataUnit may carry
KIND_LDIST = "length_dist"
KIND_ALDIST = "age_length"
KIND_MATURITY = "maturity"
KIND_LANDINGS = "landings"


@dataclass(frozen=True)
class CellKey:
    """Identity of one elementary data unit: where, when and from what source."""

    subdivision: str
    year: int
    month: int
    source: str


@dataclass
class DataUnit:
    """All measurements sharing one CellKey (a heterogeneous, partly-empty record)."""

    key: CellKey
    length_dist: dict[int, float] | None = None          # 1 cm bin lower bound -> count
    age_length: dict[tuple[int, int], float] | None = None  # (age, 1 cm bin) -> count
    maturity: dict[int, tuple[float, float]] | None = None  # bin -> (immature, mature)
    landings: float | None = None                        # tonnes

    def payload_kinds(self) -> list[str]:
        kinds = []
        if self.length_dist is not None:
            kinds.append(KIND_LDIST)
        if self.age_length is not None:
            kinds.append(KIND_ALDIST)
        if self.maturity is not None:
            kinds.append(KIND_MATURITY)
        if self.landings is not None:
            kinds.append(KIND_LANDINGS)
        return kinds


@dataclass(frozen=True)
class AggregationScheme:
    """How elementary cells are rolled up to the resolution a model runs at.

    ``survey_slices`` are [lo, hi) length intervals in cm; a model bin belongs
    to the slice containing its midpoint. ``None`` means the default slicing
    (min-25, 25-45, 45-max), resolved against the store's length range.
    """

    steps_per_year: int = 12
    length_bin_cm: int = 1
    survey_slices: tuple[tuple[float, float], ...] | None = None
    plus_group_age: int = 11

    def __post_init__(self):
        if self.steps_per_year not in (12, 6, 4):
            raise ValueError(f"steps_per_year must be 12, 6 or 4, got {self.steps_per_year}")
        if self.length_bin_cm not in (1, 2):
            raise ValueError(f"length_bin_cm must be 1 or 2, got {self.length_bin_cm}")
        if self.plus_group_age < 2:
            raise ValueError("plus_group_age must be at least 2")

    @property
    def months_per_step(self) -> int:
        return 12 // self.steps_per_year

    def step_of_month(self, month: int) -> int:
        return (month - 1) // self.months_per_step

    def resolved_slices(self, length_range: tuple[int, int]) -> tuple[tuple[float, float], ...]:
        lo, hi = length_range
        if self.survey_slices is not None:
            slices = self.survey_slices
        else:
            slices = ((lo, 25.0), (25.0, 45.0), (45.0, hi))
        if len(slices) != 3:
            raise ValueError("exactly three survey slices are required")
        for (a, b), (c, _) in zip(slices, slices[1:]):
            if b != c:
                raise ValueError("survey slices must be contiguous")
        if slices[0][0] > lo or slices[-1][1] < hi:
            raise ValueError("survey slices must cover the length range")
        return tuple((float(a), float(b)) for a, b in slices)

    def validate_against(self, store: "DataStore") -> None:
        lo, hi = store.length_range
        if (hi - lo) % self.length_bin_cm != 0:
            raise ValueError(
                f"length range {store.length_range} is not divisible into "
                f"{self.length_bin_cm} cm bins"
            )
        if self.plus_group_age < store.age_range[0]:
            raise ValueError("plus_group_age below the store's minimum age")
        self.resolved_slices(store.length_range)


class StoreError(ValueError):
    """Raised for malformed input rows or inconsistent store configuration."""


@dataclass
class ModelDataset:
    """One model-scale dataset: dense arrays over (year, step, age, model bin).

    Count-valued arrays are sums of elementary cells; a group whose observed
    total is zero simply holds zeros and is skipped by the objective.
    Maturity is kept as immature/mature counts so that proportions can be
    recomputed after any further summation.
    """

    first_year: int
    scheme: AggregationScheme
    bin_lowers: np.ndarray            # model bin lower bounds, cm
    ages: np.ndarray                  # modelled ages 1..A (A = plus group)
    ldist: dict[str, np.ndarray]      # source -> (ny, S, nbins)
    aldist: dict[str, np.ndarray]     # source -> (ny, S, nages, nbins)
    survey_index: dict[str, np.ndarray]   # survey source -> (3, ny)
    maturity_immature: np.ndarray     # (ny, nbins)
    maturity_mature: np.ndarray       # (ny, nbins)
    landings: np.ndarray              # (ny, S), tonnes; never resampled

    @property
    def n_years(self) -> int:
        return self.landings.shape[0]

    def maturity_proportion(self) -> np.ndarray:
        """Observed proportion mature per (year, bin); NaN where no fish observed."""
        tot = self.maturity_immature + self.maturity_mature
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tot > 0, self.maturity_mature / np.where(tot > 0, tot, 1.0), np.nan)

    def slice_of_bin(self) -> np.ndarray:
        """Slice index of each model bin (by bin midpoint)."""
        slices = self.scheme.resolved_slices(
            (int(self.bin_lowers[0]), int(self.bin_lowers[-1]) + self.scheme.length_bin_cm)
        )
        mid = self.bin_lowers + 0.5 * self.scheme.length_bin_cm
        out = np.zeros(mid.size, dtype=np.intp)
        for i, (lo, hi) in enumerate(slices):
            out[(mid >= lo) & (mid < hi)] = i
        out[mid >= slices[-1][1]] = len(slices) - 1
        return out


class DataStore:
    """Immutable collection of data units with fast multiset aggregation.

    Units are indexed by CellKey and by subdivision. After construction the
    payloads are additionally compiled into per-subdivision dense arrays so
    that aggregating a multiset of subdivisions is a handful of numpy sums.
    """

    def __init__(
        self,
        units: dict[CellKey, DataUnit],
        year_range: tuple[int, int],
        age_range: tuple[int, int],
        length_range: tuple[int, int],
    ):
        self.units = units
        self.year_range = (int(year_range[0]), int(year_range[1]))
        self.age_range = (int(age_range[0]), int(age_range[1]))
        self.length_range = (int(length_range[0]), int(length_range[1]))
        self.subdivisions: list[str] = sorted({k.subdivision for k in units})
        self._by_subdivision: dict[str, list[CellKey]] = {s: [] for s in self.subdivisions}
        for key in units:
            self._by_subdivision[key.subdivision].append(key)
        self._validate()
        self._compile()

    # -- construction ------------------------------------------------------

    def _validate(self) -> None:
        y0, y1 = self.year_range
        a0, a1 = self.age_range
        l0, l1 = self.length_range
        if not (y0 <= y1 and a0 <= a1 and l0 < l1):
            raise StoreError("manifest ranges are inconsistent")
        for key, unit in self.units.items():
            if not key.subdivision:
                raise StoreError("empty subdivision id")
            if not 1 <= key.month <= 12:
                raise StoreError(f"month {key.month} outside 1..12 for {key}")
            if not y0 <= key.year <= y1:
                raise StoreError(f"year {key.year} outside {self.year_range} for {key}")
            if key.source not in SOURCES:
                raise StoreError(f"unknown source {key.source!r}")
            if not unit.payload_kinds():
                raise StoreError(f"unit {key} has no payload")
            for d in (unit.length_dist, unit.maturity):
                if d is not None:
                    for b in d:
                        if not l0 <= b < l1:
                            raise StoreError(f"length bin {b} outside {self.length_range}")
            if unit.age_length is not None:
                for (a, b) in unit.age_length:
                    if not a0 <= a <= a1:
                        raise StoreError(f"age {a} outside {self.age_range}")
                    if not l0 <= b < l1:
                        raise StoreError(f"length bin {b} outside {self.length_range}")

    def _compile(self) -> None:
        """Stack each payload kind into (subdivision, cell, ...) arrays."""
        ny = self.year_range[1] - self.year_range[0] + 1
        nbins = self.length_range[1] - self.length_range[0]
        nages = self.age_range[1] - self.age_range[0] + 1
        nsub = len(self.subdivisions)
        sub_idx = {s: i for i, s in enumerate(self.subdivisions)}

        # cells (year index, month, source) that carry each payload kind anywhere
        cells: dict[str, set] = {KIND_LDIST: set(), KIND_ALDIST: set(), KIND_MATURITY: set()}
        for key, unit in self.units.items():
            yi = key.year - self.year_range[0]
            if unit.length_dist is not None:
                cells[KIND_LDIST].add((yi, key.month, key.source))
            if unit.age_length is not None:
                cells[KIND_ALDIST].add((yi, key.month, key.source))
            if unit.maturity is not None:
                cells[KIND_MATURITY].add((yi, key.month, key.source))

        self._cells = {kind: sorted(s) for kind, s in cells.items()}
        cell_pos = {kind: {c: i for i, c in enumerate(cs)} for kind, cs in self._cells.items()}

        self._ldist = np.zeros((nsub, len(self._cells[KIND_LDIST]), nbins))
        self._aldist = np.zeros((nsub, len(self._cells[KIND_ALDIST]), nages, nbins))
        self._mat = np.zeros((nsub, len(self._cells[KIND_MATURITY]), nbins, 2))
        # landings are never resampled: keep the full series only
        self._landings_full = np.zeros((ny, 12))

        l0 = self.length_range[0]
        a0 = self.age_range[0]
        for key, unit in self.units.items():
            si = sub_idx[key.subdivision]
            yi = key.year - self.year_range[0]
            cell = (yi, key.month, key.source)
            if unit.length_dist is not None:
                row = self._ldist[si, cell_pos[KIND_LDIST][cell]]
                for b, c in unit.length_dist.items():
                    row[b - l0] += c
            if unit.age_length is not None:
                arr = self._aldist[si, cell_pos[KIND_ALDIST][cell]]
                for (a, b), c in unit.age_length.items():
                    arr[a - a0, b - l0] += c
            if unit.maturity is not None:
                arr = self._mat[si, cell_pos[KIND_MATURITY][cell]]
                for b, (imm, mat) in unit.maturity.items():
                    arr[b - l0, 0] += imm
                    arr[b - l0, 1] += mat
            if unit.landings is not None:
                self._landings_full[yi, key.month - 1] += unit.landings

    # -- queries -----------------------------------------------------------

    @property
    def n_years(self) -> int:
        return self.year_range[1] - self.year_range[0] + 1

    def units_for(self, subdivision: str) -> list[DataUnit]:
        return [self.units[k] for k in self._by_subdivision.get(subdivision, [])]

    # -- aggregation -------------------------------------------------------

    def aggregate(self, scheme: AggregationScheme, subdivisions: list[str]) -> ModelDataset:
        """Aggregate a multiset of subdivisions into one model-scale dataset.

        Parameters
        ----------
        scheme : AggregationScheme
            Target resolution (time steps, bin width, slices, plus group).
        subdivisions : list of str
            Multiset of subdivision ids; an id listed m times contributes its
            data m times. Landings are exempt: the full landings series is
            always used, because landings drive the population model directly
            rather than entering the objective.

        Returns
        -------
        ModelDataset
        """
        if not subdivisions:
            raise StoreError("empty subdivision multiset")
        scheme.validate_against(self)
        sub_idx = {s: i for i, s in enumerate(self.subdivisions)}
        mult = np.zeros(len(self.subdivisions))
        for s in subdivisions:
            if s not in sub_idx:
                raise StoreError(f"unknown subdivision {s!r}")
            mult[sub_idx[s]] += 1.0

        ny = self.n_years
        S = scheme.steps_per_year
        w = scheme.length_bin_cm
        l0, l1 = self.length_range
        nbins_model = (l1 - l0) // w
        # the plus group cannot exceed the oldest observed age
        plus_age = min(scheme.plus_group_age, self.age_range[1])
        nages_model = plus_age - self.age_range[0] + 1
        nages_store = self.age_range[1] - self.age_range[0] + 1

        def rebin(arr: np.ndarray) -> np.ndarray:
            # last axis: 1 cm bins -> model bins (sum of w adjacent bins)
            if w == 1:
                return arr
            return arr.reshape(arr.shape[:-1] + (nbins_model, w)).sum(axis=-1)

        def fold_ages(arr: np.ndarray) -> np.ndarray:
            # second-to-last axis: store ages -> model ages with plus group
            if nages_model >= nages_store:
                return arr
            head = arr[..., : nages_model - 1, :]
            tail = arr[..., nages_model - 1 :, :].sum(axis=-2, keepdims=True)
            return np.concatenate([head, tail], axis=-2)

        ldist = {s: np.zeros((ny, S, nbins_model)) for s in SOURCES}
        aldist = {s: np.zeros((ny, S, nages_model, nbins_model)) for s in SOURCES}

        summed_ld = rebin(np.tensordot(mult, self._ldist, axes=1))
        for (yi, month, source), row in zip(self._cells[KIND_LDIST], summed_ld):
            ldist[source][yi, scheme.step_of_month(month)] += row

        summed_al = fold_ages(rebin(np.tensordot(mult, self._aldist, axes=1)))
        for (yi, month, source), arr in zip(self._cells[KIND_ALDIST], summed_al):
            aldist[source][yi, scheme.step_of_month(month)] += arr

        mat_imm = np.zeros((ny, nbins_model))
        mat_mat = np.zeros((ny, nbins_model))
        summed_mat = np.tensordot(mult, self._mat, axes=1)
        for (yi, _month, _source), arr in zip(self._cells[KIND_MATURITY], summed_mat):
            mat_imm[yi] += rebin(arr[:, 0])
            mat_mat[yi] += rebin(arr[:, 1])

        landings = self._landings_full.reshape(ny, S, 12 // S).sum(axis=2)

        bin_lowers = np.arange(l0, l1, w, dtype=float)
        ages = np.arange(self.age_range[0], plus_age + 1)
        ds = ModelDataset(
            first_year=self.year_range[0],
            scheme=scheme,
            bin_lowers=bin_lowers,
            ages=ages,
            ldist=ldist,
            aldist=aldist,
            survey_index={},
            maturity_immature=mat_imm,
            maturity_mature=mat_mat,
            landings=landings,
        )
        slice_of = ds.slice_of_bin()
        proj = np.zeros((nbins_model, 3))
        proj[np.arange(nbins_model), slice_of] = 1.0
        for src in SURVEY_SOURCES:
            per_year = ldist[src].sum(axis=1)        # (ny, nbins)
            ds.survey_index[src] = (per_year @ proj).T   # (3, ny)
        return ds


# -- ingestion ---------------------------------------------------------------

def _parse_row(path: str, lineno: int, row: dict, fields: dict[str, type]) -> dict:
    out = {}
    for name, typ in fields.items():
        raw = row.get(name)
        if raw is None or raw == "":
            raise StoreError(f"{path}:{lineno}: missing field {name!r}")
        try:
            out[name] = typ(raw)
        except ValueError as exc:
            raise StoreError(f"{path}:{lineno}: bad {name!r} value {raw!r}") from exc
    return out


def _get_unit(units: dict[CellKey, DataUnit], key: CellKey) -> DataUnit:
    unit = units.get(key)
    if unit is None:
        unit = units[key] = DataUnit(key=key)
    return unit


def ingest_rows(
    length_rows=(),
    age_length_rows=(),
    maturity_rows=(),
    landings_rows=(),
    *,
    year_range: tuple[int, int],
    age_range: tuple[int, int],
    length_range: tuple[int, int],
) -> DataStore:
    """Build a store from parsed row tuples (the CSV readers feed this).

    Duplicate rows for the same cell and payload are summed. Row formats:
    lengths (sub, year, month, source, length, count); age-length adds age;
    maturity carries (immature, mature); landings (sub, year, month, tonnes).
    """
    units: dict[CellKey, DataUnit] = {}
    for sub, year, month, source, length, count in length_rows:
        if count < 0:
            raise StoreError(f"negative count in lengths for {sub} {year}-{month}")
        unit = _get_unit(units, CellKey(sub, year, month, source))
        if unit.length_dist is None:
            unit.length_dist = {}
        unit.length_dist[length] = unit.length_dist.get(length, 0.0) + count
    for sub, year, month, source, age, length, count in age_length_rows:
        if count < 0:
            raise StoreError(f"negative count in age-length for {sub} {year}-{month}")
        unit = _get_unit(units, CellKey(sub, year, month, source))
        if unit.age_length is None:
            unit.age_length = {}
        k = (age, length)
        unit.age_length[k] = unit.age_length.get(k, 0.0) + count
    for sub, year, month, source, length, imm, mat in maturity_rows:
        if imm < 0 or mat < 0:
            raise StoreError(f"negative maturity count for {sub} {year}-{month}")
        unit = _get_unit(units, CellKey(sub, year, month, source))
        if unit.maturity is None:
            unit.maturity = {}
        pi, pm = unit.maturity.get(length, (0.0, 0.0))
        unit.maturity[length] = (pi + imm, pm + mat)
    for sub, year, month, tonnes in landings_rows:
        if tonnes < 0:
            raise StoreError(f"negative landings for {sub} {year}-{month}")
        unit = _get_unit(units, CellKey(sub, year, month, "com"))
        unit.landings = (unit.landings or 0.0) + tonnes
    return DataStore(units, year_range, age_range, length_range)


def load_store(directory: str | Path) -> DataStore:
    """Read a store directory: manifest.json plus the four CSV files.

    Files other than the manifest are optional; missing files simply mean no
    data of that kind. Malformed rows reject the whole file with a line
    number.
    """
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise StoreError(f"missing manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    for key in ("year_range", "age_range", "length_range"):
        if key not in manifest:
            raise StoreError(f"manifest missing {key!r}")

    def read(name: str, fields: dict[str, type]):
        path = directory / name
        if not path.exists():
            return
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, row in enumerate(reader, start=2):
                yield _parse_row(str(path), lineno, row, fields)

    def check_source(src: str) -> str:
        if src not in SOURCES:
            raise StoreError(f"unknown source {src!r} (expected one of {SOURCES})")
        return src

    length_rows = [
        (r["subdivision"], r["year"], r["month"], check_source(r["source"]), r["length_cm"], r["count"])
        for r in read("lengths.csv", {
            "subdivision": str, "year": int, "month": int, "source": str,
            "length_cm": int, "count": float,
        })
    ]
    age_length_rows = [
        (r["subdivision"], r["year"], r["month"], check_source(r["source"]), r["age"], r["length_cm"], r["count"])
        for r in read("agelength.csv", {
            "subdivision": str, "year": int, "month": int, "source": str,
            "age": int, "length_cm": int, "count": float,
        })
    ]
    maturity_rows = [
        (r["subdivision"], r["year"], r["month"], check_source(r["source"]), r["length_cm"], r["immature"], r["mature"])
        for r in read("maturity.csv", {
            "subdivision": str, "year": int, "month": int, "source": str,
            "length_cm": int, "immature": float, "mature": float,
        })
    ]
    landings_rows = [
        (r["subdivision"], r["year"], r["month"], r["weight_tonnes"])
        for r in read("landings.csv", {
            "subdivision": str, "year": int, "month": int, "weight_tonnes": float,
        })
    ]
    return ingest_rows(
        length_rows, age_length_rows, maturity_rows, landings_rows,
        year_range=tuple(manifest["year_range"]),
        age_range=tuple(manifest["age_range"]),
        length_range=tuple(manifest["length_range"]),
    )


def save_store(store_rows: dict, directory: str | Path) -> None:
    """Write CSV files plus manifest. ``store_rows`` uses the ingest_rows layout."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "manifest.json").write_text(json.dumps({
        "year_range": list(store_rows["year_range"]),
        "age_range": list(store_rows["age_range"]),
        "length_range": list(store_rows["length_range"]),
    }, indent=1))

    def write(name: str, header: list[str], rows) -> None:
        with open(directory / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    write("lengths.csv",
          ["subdivision", "year", "month", "source", "length_cm", "count"],
          store_rows.get("length_rows", ()))
    write("agelength.csv",
          ["subdivision", "year", "month", "source", "age", "length_cm", "count"],
          store_rows.get("age_length_rows", ()))
    write("maturity.csv",
          ["subdivision", "year", "month", "source", "length_cm", "immature", "mature"],
          store_rows.get("maturity_rows", ()))
    write("landings.csv",
          ["subdivision", "year", "month", "weight_tonnes"],
          store_rows.get("landings_rows", ()))
