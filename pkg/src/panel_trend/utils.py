import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional, TypeVar

import src.panel_trend.core.config as config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ensure_dir_exists(file_path: str):
    """Ensures that the directory for a given file path exists."""
    try:
        output_dir = os.path.dirname(file_path)
        if output_dir:
            os.makedirs(output_dir, exist_ok=True)
    except OSError as e:
        logger.error(f"Error creating directory for {file_path}: {e}")
        raise


def write_outputs(outputs: dict) -> List[str]:
    """
    Writes a batch of {path: text} files, all-or-nothing.

    Every file is first written to a temp sibling; only when all temp files exist
    are they renamed into place, so a failure leaves no partial output behind.
    """
    staged = []
    try:
        for path, text in outputs.items():
            ensure_dir_exists(path)
            directory = os.path.dirname(os.path.abspath(path))
            fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
            staged.append((tmp_path, path))
            try:
                f = os.fdopen(fd, "w", encoding="utf-8", newline="")
            except OSError:
                os.close(fd)
                raise
            with f:
                f.write(text)
    except Exception as e:
        logger.error(f"Failed to stage output files: {e}")
        for tmp_path, _ in staged:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
        raise

    for tmp_path, path in staged:
        os.replace(tmp_path, path)
    logger.info(f"Wrote {len(staged)} output file(s)")
    return [path for _, path in staged]


def ordered_map(func: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """
    Applies func to every item, optionally on a thread pool.

    Results always come back in input order, whatever the completion order.
    """
    items = list(items)
    workers = config.MAX_WORKERS if max_workers is None else max_workers
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def json_safe(value: Any) -> Any:
    """Recursively replaces NaN / inf floats with None so JSON output stays standard."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value
