"""
Task functions for the twisted-trace pipeline.
"""

import logging
from typing import Any, Dict, List

from .congruences import progression_primes
from .engine import TraceEngine
from .models import CongruenceReport, GenusCharSpec, ModularFunction, TraceTable
from .modfunc import load_function
from .qseries import QSeries, sieve_minus

logger = logging.getLogger(__name__)

# One engine per worker process; it owns the config and the trace cache
_engine = TraceEngine()


def _table_from(context, task_id: str = 'build_trace_table') -> TraceTable:
    ti = context['ti']
    document = ti.xcom_pull(task_ids=task_id)
    if not document:
        raise ValueError(f"No trace table received from {task_id} task")
    return TraceTable.from_document(document)


def _function_for(table: TraceTable, context) -> ModularFunction:
    f = load_function(context.get('function', 'builtin:J'), table.level)
    if f.f_id != table.f_id:
        raise ValueError(f"Trace table belongs to {table.f_id}, not to {f.name or f.f_id}")
    return f


def build_trace_table_task(**context) -> Dict[str, Any]:
    """
    Task to compute the traces needed for the generating series through q^d_max.
    """
    level = context.get('level', 1)
    f = load_function(context.get('function', 'builtin:J'), level)
    spec = GenusCharSpec.for_discriminant(context.get('delta', 1), level, context.get('root'))
    d_max = context.get('d_max', 20)

    indices = _engine.series_indices(f, level, spec, d_max)
    table = _engine.build_trace_table(f, level, spec, indices)

    logger.info(f"Built {len(table.entries)} traces of {f.name or f.f_id} (N={level}, delta={spec.delta})")
    return table.to_document()


def assemble_series_task(**context) -> Dict[str, Any]:
    """
    Task to turn the trace table into the generating series.
    """
    table = _table_from(context)
    f = _function_for(table, context)
    spec = GenusCharSpec(delta=table.delta, level=table.level, root=table.root)
    d_max = context.get('d_max', max(table.entries, default=0))

    series = _engine.series_from_table(f, table, spec, d_max)

    logger.info(f"Assembled series with {len(series.coeffs)} nonzero terms through q^{d_max}")
    return series.to_document()


def sieve_series_task(**context) -> Dict[str, Any]:
    """
    Task to keep the series coefficients with (m/t) = -1.
    """
    t = context.get('t', 3)

    ti = context['ti']
    series_data = ti.xcom_pull(task_ids='assemble_series')
    if not series_data:
        raise ValueError("No series received from assemble_series task")

    sieved = sieve_minus(t, QSeries.from_document(series_data))

    logger.info(f"Sieve with t={t} kept {len(sieved.coeffs)} terms")
    return sieved.to_document()


def congruence_scan_task(**context) -> List[Dict[str, Any]]:
    """
    Task to scan residues of traces along the first progression primes.
    """
    p = context.get('p', 3)
    nu = context.get('nu', 1)
    t = context.get('t', 3)
    m_exp = context.get('m_exp', 0)
    r_count = context.get('r_count', 1)
    n_max = context.get('n_max', 8)

    table = _table_from(context)
    f = _function_for(table, context)
    spec = GenusCharSpec(delta=table.delta, level=table.level, root=table.root)
    candidates = progression_primes(t, table.level, p, nu, r_count)

    reports = _engine.scan(f, table.level, spec, p, nu, t, m_exp, candidates, n_max)

    verdicts = [f"r={report.r}: {report.verdict}" for report in reports]
    logger.info(f"Congruence scan mod {p}^{nu}: {', '.join(verdicts)}")
    return [report.model_dump(mode="json") for report in reports]


def save_report_task(**context) -> str:
    """
    Task to save the congruence reports, and the sieved series next to them.
    """
    output_file = context.get('output_file', 'report.json')
    series_file = context.get('series_file', 'sieved_series.json')

    ti = context['ti']
    reports_data = ti.xcom_pull(task_ids='congruence_scan')
    if not reports_data:
        raise ValueError("No congruence reports received from congruence_scan task")

    reports = [CongruenceReport(**report) for report in reports_data]
    saved_file = _engine.save_report_to_json(reports, output_file)

    series_data = ti.xcom_pull(task_ids='sieve_series')
    if series_data:
        _engine.save_series_to_json(QSeries.from_document(series_data), series_file)

    return saved_file
