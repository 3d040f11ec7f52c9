import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .arithmetic import is_square_mod
from .cache import TraceCache
from .congruences import scan_congruence
from .cusps import cusp_reps
from .errors import InvalidInputError, ModuliError, UnsupportedRegimeError
from .forms import gamma0_class_reps
from .models import CongruenceReport, Config, GenusCharSpec, ModularFunction, TraceEntry, TraceTable
from .modfunc import constant_terms
from .qseries import QSeries
from .traces import _check_level, certified_trace, constant_coefficient, vanishing_bound

logger = logging.getLogger(__name__)


def _compute_entry(f: ModularFunction, N: int, spec: GenusCharSpec, m: int, config: Config) -> TraceEntry:
    value, err = certified_trace(f, N, spec, m, config)
    return TraceEntry(m=m, value=value, err=err)


def _plain(c: Fraction):
    return c.numerator if c.denominator == 1 else c


class TraceEngine:
    """Computes, caches and stores twisted traces for one run configuration."""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config.from_env()
        self.cache = TraceCache(self.config.cache_dir) if self.config.use_cache else None

    def class_table(self, D: int, N: int) -> List[Dict[str, Any]]:
        rows = [rep.to_row() for rep in gamma0_class_reps(D, N)]
        logger.info(f"{len(rows)} classes of discriminant -{D} at level {N}")
        return rows

    def cusp_table(self, N: int) -> List[Dict[str, Any]]:
        return [cusp.to_row() for cusp in cusp_reps(N)]

    def _cached(self, f: ModularFunction, N: int, spec: GenusCharSpec, m: int) -> Optional[TraceEntry]:
        if self.cache is None:
            return None
        return self.cache.get(f.f_id, N, spec.delta, spec.root, m)

    def _store(self, f: ModularFunction, N: int, spec: GenusCharSpec, entry: TraceEntry) -> None:
        if self.cache is not None:
            self.cache.put(f.f_id, N, spec.delta, spec.root, entry)

    def trace_entry(self, f: ModularFunction, N: int, spec: GenusCharSpec, m: int) -> TraceEntry:
        entry = self._cached(f, N, spec, m)
        if entry is not None:
            return entry
        entry = _compute_entry(f, N, spec, m, self.config)
        self._store(f, N, spec, entry)
        return entry

    def build_trace_table(self, f: ModularFunction, N: int, spec: GenusCharSpec,
                          indices: Iterable[int]) -> TraceTable:
        """Traces at every index, from the cache where possible; merged in index order."""
        _check_level(f, N, spec)
        found: Dict[int, TraceEntry] = {}
        missing: List[int] = []
        for m in sorted(set(indices)):
            entry = self._cached(f, N, spec, m)
            if entry is None:
                missing.append(m)
            else:
                found[m] = entry
        logger.info(f"{f.name or f.f_id}: {len(found)} cached traces, {len(missing)} to compute")

        if self.config.threads > 1 and len(missing) > 1:
            with ProcessPoolExecutor(max_workers=self.config.threads) as pool:
                futures = {pool.submit(_compute_entry, f, N, spec, m, self.config): m for m in missing}
                for future in as_completed(futures):
                    m = futures[future]
                    try:
                        found[m] = future.result()
                    except Exception as e:
                        logger.error(f"Trace at index {m} failed: {e}")
                        raise
                    self._store(f, N, spec, found[m])
        else:
            for m in missing:
                found[m] = _compute_entry(f, N, spec, m, self.config)
                self._store(f, N, spec, found[m])

        return TraceTable(
            f_id=f.f_id, level=N, delta=spec.delta, root=spec.root,
            entries={m: found[m] for m in sorted(found)},
        )

    def series_indices(self, f: ModularFunction, N: int, spec: GenusCharSpec, D_max: int) -> List[int]:
        """Indices carrying the holomorphic part of the generating series through q^D_max."""
        indices = [
            -m * m for m in range(vanishing_bound(f, N, spec.delta), 0, -1)
            if (m * m) % spec.delta == 0
        ]
        indices.extend(
            D for D in range(1, D_max + 1)
            if D % 4 in (0, 3) and D % abs(spec.delta) == 0 and is_square_mod(-D, 4 * N)
        )
        return indices

    def series_from_table(self, f: ModularFunction, table: TraceTable, spec: GenusCharSpec,
                          D_max: int) -> QSeries:
        if not constant_terms(f, table.level).all_vanish:
            raise UnsupportedRegimeError(
                f"{f.name or f.f_id} has a nonzero constant term at some cusp of level {table.level}"
            )
        coeffs = {0: _plain(constant_coefficient(f, table.level, spec))}
        for m, entry in table.entries.items():
            if m <= D_max:
                coeffs[m] = _plain(entry.value)
        return QSeries(coeffs, D_max + 1)

    def generating_series(self, f: ModularFunction, N: int, spec: GenusCharSpec, D_max: int) -> QSeries:
        table = self.build_trace_table(f, N, spec, self.series_indices(f, N, spec, D_max))
        return self.series_from_table(f, table, spec, D_max)

    def scan(self, f: ModularFunction, N: int, spec: GenusCharSpec, p: int, nu: int, t: int,
             m_exp: int, r_candidates: Sequence[int], n_max: int) -> List[CongruenceReport]:
        def cached_trace(index: int) -> Tuple[Fraction, float]:
            entry = self.trace_entry(f, N, spec, index)
            return entry.value, entry.err

        return scan_congruence(f, N, spec, p, nu, t, m_exp, r_candidates, n_max, self.config, cached_trace)

    def _dump(self, data: Any, filename: str, what: str) -> str:
        try:
            path = Path(filename)
            if path.parent != Path("."):
                path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as fh:
                json.dump(data, fh, indent=2, sort_keys=True, ensure_ascii=False)
            logger.info(f"Successfully saved {what} to {filename}")
            return filename
        except OSError as e:
            raise ModuliError(f"Failed to save {what} to JSON: {e}") from e

    def save_table_to_json(self, table: TraceTable, filename: str = "traces.json") -> str:
        return self._dump(table.to_document(), filename, f"{len(table.entries)} traces")

    def save_series_to_json(self, series: QSeries, filename: str = "series.json") -> str:
        return self._dump(series.to_document(), filename, "series")

    def save_report_to_json(self, reports: List[CongruenceReport], filename: str = "report.json") -> str:
        data = [report.model_dump(mode="json") for report in reports]
        return self._dump(data, filename, f"{len(reports)} congruence reports")

    @staticmethod
    def _load(filename: str, what: str) -> Any:
        try:
            with open(filename, 'r', encoding='utf-8') as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"Failed to load {what} from {filename}: {e}") from e

    @classmethod
    def load_series_json(cls, filename: str) -> QSeries:
        try:
            return QSeries.from_document(cls._load(filename, "series"))
        except ValidationError as e:
            raise InvalidInputError(f"Failed to load series from {filename}: {e}") from e

    @classmethod
    def load_table_json(cls, filename: str) -> TraceTable:
        try:
            return TraceTable.from_document(cls._load(filename, "trace table"))
        except (KeyError, TypeError, ValidationError) as e:
            raise InvalidInputError(f"Failed to load trace table from {filename}: {e}") from e

    @classmethod
    def load_reports_json(cls, filename: str) -> List[CongruenceReport]:
        try:
            return [CongruenceReport.model_validate(row) for row in cls._load(filename, "congruence reports")]
        except ValidationError as e:
            raise InvalidInputError(f"Failed to load congruence reports from {filename}: {e}") from e
