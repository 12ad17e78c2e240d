import logging
import os

import numpy as np
import pandas as pd

from mgec.data.dataset import Dataset
from mgec.data.synthetic import TeacherRecord
from mgec.utils.errors import DatasetParseError
from mgec.utils.processing import ensure_dir, load_json, save_json

logger = logging.getLogger(__name__)

INDEX_COLUMNS = ["domain_id", "label", "t_index"]
FORMATS = ("csv", "grid-binary")


class LoadData(object):
    """Reads and writes datasets that live under a common base path.

    A dataset at base path ``data/synth`` is made of ``data/synth.json`` (sidecar) plus
    ``data/synth.csv`` for the csv format, or ``data/synth.bin`` and ``data/synth.index.csv`` for the
    grid-binary format. A teacher record, when present, is ``data/synth.teacher.json``.
    """

    def __init__(self, path):
        self.base_path = self.get_base_path(path)

    @staticmethod
    def get_base_path(path):
        for ext in (".index.csv", ".teacher.json", ".csv", ".bin", ".json"):
            if path.endswith(ext):
                return path[: -len(ext)]
        return path

    @property
    def sidecar_path(self):
        return self.base_path + ".json"

    @property
    def csv_path(self):
        return self.base_path + ".csv"

    @property
    def bin_path(self):
        return self.base_path + ".bin"

    @property
    def index_path(self):
        return self.base_path + ".index.csv"

    @property
    def teacher_path(self):
        return self.base_path + ".teacher.json"

    def detect_format(self):
        if os.path.exists(self.bin_path):
            return "grid-binary"
        return "csv"

    def load_sidecar(self):
        try:
            sidecar = load_json(self.sidecar_path)
        except FileNotFoundError:
            raise DatasetParseError("missing sidecar json", path=self.sidecar_path)
        except ValueError as e:
            raise DatasetParseError(f"sidecar is not valid json ({e})", path=self.sidecar_path)
        return sidecar

    def load_dataset(self, fmt=None):
        fmt = fmt or self.detect_format()
        if fmt == "csv":
            return self.load_csv()
        if fmt == "grid-binary":
            return self.load_grid_binary()
        raise DatasetParseError(f"unknown format {fmt!r}, expected one of {FORMATS}")

    def load_teacher(self):
        if not os.path.exists(self.teacher_path):
            return None
        return TeacherRecord.load(self.teacher_path)

    @staticmethod
    def _sidecar_int(sidecar, key, path):
        try:
            return int(sidecar[key])
        except (KeyError, TypeError, ValueError):
            raise DatasetParseError(f"sidecar field {key!r} missing or not an integer", path=path)

    @staticmethod
    def _read_table(path, expected_columns):
        try:
            df = pd.read_csv(path, float_precision="round_trip")
        except FileNotFoundError:
            raise
        except pd.errors.ParserError as e:
            raise DatasetParseError(f"malformed row ({e})", path=path)
        except pd.errors.EmptyDataError:
            raise DatasetParseError("file is empty", path=path, line=1)
        header = list(df.columns)
        if header != expected_columns:
            raise DatasetParseError(
                f"header must be {','.join(expected_columns[:5])}{',...' if len(expected_columns) > 5 else ''} "
                f"({len(expected_columns)} columns), got {len(header)} columns starting {header[:5]}",
                path=path, line=1)
        numeric = df.apply(pd.to_numeric, errors="coerce")
        bad = numeric.isna().any(axis=1).to_numpy()
        if bad.any():
            row = int(np.argmax(bad))
            raise DatasetParseError("missing or non-numeric value", path=path, line=row + 2)
        return numeric

    @staticmethod
    def _index_arrays(df, class_count, path):
        index = df[INDEX_COLUMNS].to_numpy(dtype=np.float64)
        non_integer = np.any(index != np.round(index), axis=1)
        if non_integer.any():
            row = int(np.argmax(non_integer))
            raise DatasetParseError("domain_id, label and t_index must be integers", path=path, line=row + 2)
        index = index.astype(np.int64)
        labels = index[:, 1]
        bad = (labels < 0) | (labels >= class_count)
        if bad.any():
            row = int(np.argmax(bad))
            raise DatasetParseError(f"label {labels[row]} outside [0, {class_count}) in row {row + 1}",
                                    path=path, line=row + 2)
        return index[:, 0], labels, index[:, 2]

    def load_csv(self):
        sidecar = self.load_sidecar()
        class_count = self._sidecar_int(sidecar, "class_count", self.sidecar_path)
        dim = self._sidecar_int(sidecar, "dim", self.sidecar_path)
        columns = INDEX_COLUMNS + [f"f{i}" for i in range(dim)]
        df = self._read_table(self.csv_path, columns)
        domain_ids, labels, t_indices = self._index_arrays(df, class_count, self.csv_path)
        features = df[columns[3:]].to_numpy(dtype=np.float64)
        return self._build(features, labels, domain_ids, t_indices, class_count, self.csv_path)

    def load_grid_binary(self):
        sidecar = self.load_sidecar()
        class_count = self._sidecar_int(sidecar, "class_count", self.sidecar_path)
        electrodes = self._sidecar_int(sidecar, "electrodes", self.sidecar_path)
        timesteps = self._sidecar_int(sidecar, "timesteps", self.sidecar_path)
        count = self._sidecar_int(sidecar, "count", self.sidecar_path)
        df = self._read_table(self.index_path, INDEX_COLUMNS)
        if df.shape[0] != count:
            raise DatasetParseError(f"index has {df.shape[0]} rows but sidecar count is {count}",
                                    path=self.index_path)
        domain_ids, labels, t_indices = self._index_arrays(df, class_count, self.index_path)
        raw = np.fromfile(self.bin_path, dtype="<f4")
        expected = count * electrodes * timesteps
        if raw.size != expected:
            raise DatasetParseError(f"binary holds {raw.size} floats, expected {expected}", path=self.bin_path)
        features = raw.astype(np.float64).reshape(count, electrodes, timesteps)
        return self._build(features, labels, domain_ids, t_indices, class_count, self.bin_path)

    @staticmethod
    def _build(features, labels, domain_ids, t_indices, class_count, path):
        try:
            return Dataset(features, labels, domain_ids, t_indices, class_count)
        except ValueError as e:
            raise DatasetParseError(str(e), path=path)

    def save_dataset(self, dataset, fmt="csv", teacher=None):
        ensure_dir(os.path.dirname(self.base_path))
        if fmt == "csv":
            if dataset.is_grid:
                raise DatasetParseError("grid samples need the grid-binary format")
            df = pd.DataFrame({"domain_id": dataset.domain_ids, "label": dataset.labels,
                               "t_index": dataset.t_indices})
            feats = pd.DataFrame(dataset.features, columns=[f"f{i}" for i in range(dataset.features.shape[1])])
            pd.concat([df, feats], axis=1).to_csv(self.csv_path, index=False)
            save_json({"class_count": dataset.class_count, "dim": dataset.features.shape[1]}, self.sidecar_path)
        elif fmt == "grid-binary":
            features = dataset.features if dataset.is_grid else dataset.features[:, None, :]
            pd.DataFrame({"domain_id": dataset.domain_ids, "label": dataset.labels,
                          "t_index": dataset.t_indices}).to_csv(self.index_path, index=False)
            features.astype("<f4").tofile(self.bin_path)
            save_json({"class_count": dataset.class_count, "electrodes": features.shape[1],
                       "timesteps": features.shape[2], "count": len(dataset)}, self.sidecar_path)
        else:
            raise DatasetParseError(f"unknown format {fmt!r}, expected one of {FORMATS}")
        if teacher is not None:
            teacher.save(self.teacher_path)
        logger.info("saved %d samples to %s (%s)", len(dataset), self.base_path, fmt)
        return self.base_path


def load_dataset(path, fmt=None):
    return LoadData(path).load_dataset(fmt)


def save_dataset(dataset, path, fmt="csv", teacher=None):
    return LoadData(path).save_dataset(dataset, fmt, teacher)
