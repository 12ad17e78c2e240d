import json
import os

import numpy as np


def ensure_dir(path):
    if path and not os.path.exists(path):
        os.makedirs(path)


def save_csv(df, data_dir, csv_name):
    ensure_dir(data_dir)
    csv_path = os.path.join(data_dir, csv_name)
    df.to_csv(csv_path, index=False)
    return csv_path


def to_jsonable(obj):
    """Convert numpy containers and scalars to plain python values for json.

    Floats stay python floats so json writes their shortest round-trip repr.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def canonical_json(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2)


def save_json(obj, path):
    ensure_dir(os.path.dirname(path))
    with open(path, "w", encoding="utf-8") as f:
        f.write(canonical_json(obj))
        f.write("\n")
    return path


def load_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def append_json_line(obj, path):
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(to_jsonable(obj), sort_keys=True))
        f.write("\n")
