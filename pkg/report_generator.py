"""
Report generation module.
Turns per-cell records into the summary table, the convergence trace and the timing file,
and re-renders them from stored reports.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

import config
from data_loader import atomic_write_text
from errors import DataFormatError

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['setting', 'model', 'status', 'repeats', 'accuracy', 'accuracy_range',
                   'nn_accuracy', 'delta_vs_base', 'fixed_point_iteration', 'iterations']


def _base_name(model):
    return model.split('+')[0] if '+' in model else None


def _mean(values, decimals):
    return round(float(np.mean(values)), decimals) if values else None


def summarize(records, decimals=config.ACCURACY_DECIMALS):
    """
    One summary row per (setting, model), in first-seen order.

    Parameters:
    -----------
    records : list
        Cell records as written to reports/*.json.
    decimals : int
        Accuracies are rounded to this many decimals before the deltas are taken,
        so delta_vs_base is the exact difference of the reported values.

    Returns:
    --------
    pandas.DataFrame
    """
    groups = {}
    for record in records:
        groups.setdefault((record.get('setting', ''), record['model']), []).append(record)

    rows = []
    for (setting, model), group in groups.items():
        ok = [r for r in group if r['status'] == 'ok']
        accs = [r['final_accuracy'] for r in ok if r.get('final_accuracy') is not None]
        nn = [r['baseline_accuracy'] for r in ok if r.get('baseline_accuracy') is not None]
        fixed = [r.get('fixed_point_iteration') for r in ok]
        rows.append({
            'setting': setting,
            'model': model,
            'status': 'ok' if len(ok) == len(group) else 'FAILED',
            'repeats': len(group),
            'accuracy': _mean(accs, decimals),
            'accuracy_range': round(max(accs) - min(accs), decimals) if len(accs) > 1 else None,
            'nn_accuracy': _mean(nn, decimals),
            'delta_vs_base': None,
            'fixed_point_iteration': max(fixed) if fixed and None not in fixed else None,
            'iterations': max(len(r['iterations']) for r in ok) if ok else None,
        })

    reported = {(row['setting'], row['model']): row['accuracy'] for row in rows}
    for row in rows:
        base = _base_name(row['model'])
        base_acc = reported.get((row['setting'], base)) if base else None
        if row['accuracy'] is not None and base_acc is not None:
            row['delta_vs_base'] = round(row['accuracy'] - base_acc, decimals)

    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    for column in ('repeats', 'fixed_point_iteration', 'iterations'):
        summary[column] = summary[column].astype('Int64')
    return summary


def render_summary_csv(summary, decimals=config.ACCURACY_DECIMALS):
    return summary.to_csv(index=False, float_format=f'%.{decimals}f', lineterminator='\n')


def _cell(value, decimals, signed=False):
    if value is None or pd.isna(value):
        return '-'
    if isinstance(value, float):
        return f"{value:+.{decimals}f}" if signed else f"{value:.{decimals}f}"
    return str(value)


def render_summary_markdown(summary, timings=None, decimals=config.ACCURACY_DECIMALS):
    """Plain-text markdown table; wall time is the mean over the timed cells of each row."""
    wall = {}
    for t in timings or []:
        wall.setdefault((t.get('setting') or '', t['model']), []).append(float(t['wall_time']))

    lines = [
        "| setting | model | accuracy | range | 1-NN | delta vs base | fixed point | wall time (s) |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for row in summary.itertuples(index=False):
        times = wall.get((row.setting if isinstance(row.setting, str) else '', row.model))
        accuracy = 'FAILED' if row.status == 'FAILED' and pd.isna(row.accuracy) else _cell(row.accuracy, decimals)
        lines.append(
            f"| {row.setting or '-'} | {row.model} | {accuracy} | {_cell(row.accuracy_range, decimals)} "
            f"| {_cell(row.nn_accuracy, decimals)} | {_cell(row.delta_vs_base, decimals, signed=True)} "
            f"| {_cell(row.fixed_point_iteration, decimals)} "
            f"| {f'{np.mean(times):.2f}' if times else '-'} |")
    failed = int((summary['status'] == 'FAILED').sum())
    if failed:
        lines.append("")
        lines.append(f"{failed} row(s) contain FAILED cells; see reports/ for the errors.")
    return "\n".join(lines) + "\n"


def render_trace_csv(records, decimals=config.ACCURACY_DECIMALS):
    """Per-iteration accuracy, churn and objective of every successful cell."""
    rows = []
    for record in records:
        if record['status'] != 'ok':
            continue
        for it in record['iterations']:
            rows.append({
                'cell': record['cell'],
                'model': record['model'],
                'setting': record.get('setting', ''),
                'repeat': record.get('repeat', 0),
                'iteration': it['iteration'],
                'accuracy': None if it['accuracy'] is None else round(it['accuracy'], decimals),
                'churn': it['churn'],
                'objective': it['objective'],
            })
    columns = ['cell', 'model', 'setting', 'repeat', 'iteration', 'accuracy', 'churn', 'objective']
    return pd.DataFrame(rows, columns=columns).to_csv(index=False, lineterminator='\n')


def render_timing_csv(timings):
    columns = ['cell', 'model', 'setting', 'repeat', 'wall_time']
    return pd.DataFrame(timings, columns=columns).to_csv(index=False, float_format='%.4f', lineterminator='\n')


def write_summaries(out_dir, records, decimals=config.ACCURACY_DECIMALS, timings=None):
    """Write summary.csv, summary.md, trace.csv and, when timings are given, timing.csv."""
    out_dir = Path(out_dir)
    summary = summarize(records, decimals)
    atomic_write_text(out_dir / 'summary.csv', render_summary_csv(summary, decimals))
    atomic_write_text(out_dir / 'summary.md', render_summary_markdown(summary, timings, decimals))
    atomic_write_text(out_dir / 'trace.csv', render_trace_csv(records, decimals))
    if timings is not None:
        atomic_write_text(out_dir / 'timing.csv', render_timing_csv(timings))
    return summary


def load_stored_reports(out_dir):
    """
    Cell records from reports/*.json, in the order the experiment ran them.

    When experiment.json lists the run's cells, reports for any other cell are skipped.
    """
    report_dir = Path(out_dir) / 'reports'
    paths = sorted(report_dir.glob('*.json'))
    if not paths:
        raise DataFormatError(f"No stored reports under {report_dir}")
    records = []
    for path in paths:
        try:
            records.append(json.loads(path.read_text(encoding='utf-8')))
        except json.JSONDecodeError as e:
            raise DataFormatError(f"Malformed report '{path}': {e}") from e
    cells = _listed_cells(Path(out_dir))
    if cells is not None:
        records = [r for r in records if r.get('cell') in cells]
        if not records:
            raise DataFormatError(f"None of the reports under {report_dir} belong to the run in experiment.json")
    return sorted(records, key=lambda r: r.get('index', 0))


def _listed_cells(out_dir):
    path = out_dir / 'experiment.json'
    if not path.exists():
        return None
    try:
        cells = json.loads(path.read_text(encoding='utf-8')).get('cells')
    except json.JSONDecodeError as e:
        raise DataFormatError(f"Malformed experiment file '{path}': {e}") from e
    return None if cells is None else set(cells)


def rerender(out_dir, decimals=config.ACCURACY_DECIMALS):
    """Rebuild the summaries of a finished run from its stored reports."""
    out_dir = Path(out_dir)
    records = load_stored_reports(out_dir)
    timing_path = out_dir / 'timing.csv'
    timings = None
    if timing_path.exists():
        timings = pd.read_csv(timing_path, keep_default_na=False).to_dict('records')
    logger.info(f"Re-rendering {len(records)} stored reports in {out_dir}")
    return write_summaries(out_dir, records, decimals, timings)
