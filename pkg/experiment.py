"""
Experiment orchestration: expand a spec into (setting x repeat x model) cells, run them,
and write per-cell reports plus the summary, timing, trace and embedding files.
"""

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

import config
from adapt import ModelKind, run_adaptation
from data_loader import atomic_write_text, load_domain_pair
from datamodel import AdaptConfig
from errors import ConfigError, DbMmdError
from report_generator import write_summaries
from sample_data import SyntheticRecipe, feature_digest, generate_synthetic

logger = logging.getLogger(__name__)

SPEC_KEYS = ('models', 'dataset', 'config', 'output_dir', 'repeat', 'dump_embeddings', 'n_jobs', 'sweep')


@dataclass
class ExperimentSpec:
    models: list
    dataset: dict
    output_dir: str = config.OUTPUT_DIR
    repeat: int = 1
    dump_embeddings: bool = False
    n_jobs: int = config.N_JOBS
    sweep: dict = field(default_factory=dict)
    config: AdaptConfig = field(default_factory=AdaptConfig)

    def __post_init__(self):
        if not self.models:
            raise ConfigError("An experiment needs at least one model")
        self.models = [ModelKind.parse(m) for m in self.models]
        if self.repeat < 1:
            raise ConfigError(f"repeat must be >= 1, got {self.repeat}")
        if 'synthetic' not in self.dataset and not {'source', 'target'} <= set(self.dataset):
            raise ConfigError("dataset needs either 'synthetic' or both 'source' and 'target'")
        for key, values in self.sweep.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep values for '{key}' must be a non-empty list")
            for value in values:
                self.config.updated(**{key: value})


@dataclass
class Cell:
    """One (setting, repeat, model) run."""
    cell_id: str
    model: ModelKind
    setting: str
    repeat: int
    seed: int
    cfg: AdaptConfig
    pair: object
    label_mapping: dict


@dataclass
class ExperimentResult:
    output_dir: Path
    summary: pd.DataFrame
    records: list
    failed: int = 0

    @property
    def ok(self):
        return self.failed == 0


def load_experiment_spec(source):
    """
    Build an ExperimentSpec from a JSON file path or an already parsed dict.

    Relative dataset paths in a file are resolved against the file's directory.
    """
    base_dir = None
    if isinstance(source, dict):
        data = source
    else:
        path = Path(source)
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read experiment spec '{path}': {e}") from e
        base_dir = path.parent

    if not isinstance(data, dict):
        raise ConfigError("Experiment spec must be a JSON object")
    unknown = sorted(set(data) - set(SPEC_KEYS))
    if unknown:
        raise ConfigError(f"Unknown experiment spec key(s): {unknown}")

    dataset = dict(data.get('dataset') or {})
    if base_dir is not None:
        for key in ('source', 'target'):
            if key in dataset and not Path(dataset[key]).is_absolute():
                dataset[key] = str(base_dir / dataset[key])

    try:
        return ExperimentSpec(
            models=list(data.get('models', config.DEFAULT_MODELS)),
            dataset=dataset,
            config=AdaptConfig.from_dict(data.get('config') or {}),
            output_dir=data.get('output_dir', config.OUTPUT_DIR),
            repeat=int(data.get('repeat', 1)),
            dump_embeddings=bool(data.get('dump_embeddings', False)),
            n_jobs=int(data.get('n_jobs', config.N_JOBS)),
            sweep=dict(data.get('sweep') or {}),
        )
    except DbMmdError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid experiment spec: {e}") from e


def sweep_settings(sweep):
    """Cartesian product of the swept values as (tag, overrides) in declaration order."""
    if not sweep:
        return [('', {})]
    keys = list(sweep)
    settings = []
    for values in itertools.product(*(sweep[k] for k in keys)):
        overrides = dict(zip(keys, values))
        tag = ';'.join(f"{k}={v}" for k, v in overrides.items())
        settings.append((tag, overrides))
    return settings


def _load_dataset(dataset, seed):
    if 'synthetic' in dataset:
        recipe = SyntheticRecipe.from_dict({**dataset['synthetic'], 'seed': seed})
        pair = generate_synthetic(recipe)
        return pair, {c: c for c in range(pair.class_count)}
    return load_domain_pair(dataset['source'], dataset['target'], dataset.get('format'))


def _base_seed(spec):
    return spec.dataset.get('synthetic', {}).get('seed', spec.config.seed)


def build_cells(spec):
    """Expand the spec; each repeat r draws its data with seed base + r."""
    cells = []
    base_seed = _base_seed(spec)
    for repeat in range(spec.repeat):
        seed = base_seed + repeat
        pair, mapping = _load_dataset(spec.dataset, seed)
        for tag, overrides in sweep_settings(spec.sweep):
            cfg = spec.config.updated(**{**overrides, 'seed': seed})
            for kind in spec.models:
                parts = [kind.name.replace('+', '_')]
                if tag:
                    parts.append(tag.replace(';', '_').replace('=', '-'))
                parts.append(f"r{repeat}")
                cells.append(Cell(cell_id='__'.join(parts), model=kind, setting=tag, repeat=repeat,
                                  seed=seed, cfg=cfg, pair=pair, label_mapping=mapping))
    return cells


def run_cell(cell):
    """Run one cell; failures come back as a FAILED record instead of raising."""
    meta = {'cell': cell.cell_id, 'model': cell.model.name, 'setting': cell.setting,
            'repeat': cell.repeat, 'seed': cell.seed}
    try:
        report = run_adaptation(cell.pair, cell.cfg, cell.model, label_mapping=cell.label_mapping)
    except Exception as e:
        logger.error(f"Cell {cell.cell_id} failed: {e}", exc_info=True)
        return {**meta, 'status': 'FAILED', 'error': str(e)}, None
    record = {**meta, 'status': 'ok', **report.to_dict()}
    record['model'] = cell.model.name
    return record, report


def _embedding_frame(pair, report):
    Z = report.embedding
    ns = pair.n_source
    frame = pd.DataFrame(Z.T, columns=[f"z{i}" for i in range(Z.shape[0])])
    frame.insert(0, 'domain', ['source'] * ns + ['target'] * pair.n_target)
    frame.insert(1, 'label', np.concatenate([pair.source.labels, report.predicted_labels]))
    if pair.target.true_labels is not None:
        frame.insert(2, 'true_label', np.concatenate([pair.source.labels, pair.target.true_labels]))
    return frame


def run_experiment(spec):
    """
    Run every cell of an experiment and persist its reports.

    Parameters:
    -----------
    spec : ExperimentSpec or dict or path

    Returns:
    --------
    ExperimentResult
        Summary table plus the per-cell records; `failed` counts FAILED cells.
    """
    if not isinstance(spec, ExperimentSpec):
        spec = load_experiment_spec(spec)
    out_dir = Path(spec.output_dir)
    cells = build_cells(spec)
    logger.info(f"Running {len(cells)} cells ({len(spec.models)} models, {spec.repeat} repeats, "
                f"{len(sweep_settings(spec.sweep))} settings) with n_jobs={spec.n_jobs}")

    _clear_cell_outputs(out_dir)
    outcomes = Parallel(n_jobs=spec.n_jobs)(delayed(run_cell)(cell) for cell in cells)

    records, timings = [], []
    for index, (cell, (record, report)) in enumerate(zip(cells, outcomes)):
        record['index'] = index
        records.append(record)
        atomic_write_text(out_dir / 'reports' / f"{cell.cell_id}.json", json.dumps(record, indent=2))
        if report is None:
            continue
        timings.append({'cell': cell.cell_id, 'model': cell.model.name, 'setting': cell.setting,
                        'repeat': cell.repeat, 'wall_time': report.wall_time})
        if spec.dump_embeddings:
            frame = _embedding_frame(cell.pair, report)
            atomic_write_text(out_dir / 'embeddings' / f"{cell.cell_id}.csv",
                              frame.to_csv(index=False, float_format='%.17g', lineterminator='\n'))
        logger.info(f"{cell.cell_id}: accuracy={report.final_accuracy} "
                    f"(1-NN {report.baseline_accuracy}) in {report.wall_time:.2f}s")

    experiment = _spec_to_dict(spec)
    experiment['cells'] = [cell.cell_id for cell in cells]
    experiment['dataset_digests'] = {str(c.repeat): feature_digest(c.pair) for c in cells}
    atomic_write_text(out_dir / 'experiment.json', json.dumps(experiment, indent=2))
    summary = write_summaries(out_dir, records, config.ACCURACY_DECIMALS, timings)
    failed = sum(1 for r in records if r['status'] != 'ok')
    if failed:
        logger.error(f"{failed} of {len(records)} cells failed; see the FAILED rows in {out_dir / 'summary.csv'}")
    return ExperimentResult(output_dir=out_dir, summary=summary, records=records, failed=failed)


def _clear_cell_outputs(out_dir):
    """Drop per-cell files left by an earlier run into the same directory."""
    stale = sorted((out_dir / 'reports').glob('*.json')) + sorted((out_dir / 'embeddings').glob('*.csv'))
    if stale:
        logger.info(f"Removing {len(stale)} per-cell files from an earlier run in {out_dir}")
    for path in stale:
        path.unlink()


def _spec_to_dict(spec):
    return {
        'models': [m if isinstance(m, str) else m.name for m in spec.models],
        'dataset': spec.dataset,
        'config': spec.config.to_dict(),
        'output_dir': str(spec.output_dir),
        'repeat': spec.repeat,
        'dump_embeddings': spec.dump_embeddings,
        'n_jobs': spec.n_jobs,
        'sweep': spec.sweep,
    }
