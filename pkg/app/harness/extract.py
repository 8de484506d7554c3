import csv
import logging
from pathlib import Path
from ..models.config_models import ExtractionConfig, TaskSpec
from ..network.checkpoint import load_checkpoint
from ..synth.dataset import generate
from ..topology.features import TopoFeatureVector, extract_features


logger = logging.getLogger(__name__)


def write_features_csv(vector: TopoFeatureVector, path: Path) -> Path:
    """Features as (index, name, value) rows, with the layout schema in `<stem>.layout.csv`."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(f"# layout_hash={vector.layout.layout_hash}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["index", "name", "value"])
        for index, (entry, value) in enumerate(zip(vector.layout.entries, vector.values)):
            writer.writerow([index, entry.name, repr(float(value))])
    layout_path = path.with_name(f"{path.stem}.layout.csv")
    vector.layout.write_csv(layout_path)
    return layout_path


def extract_checkpoint(
    checkpoint: Path, task: TaskSpec, extraction: ExtractionConfig, out_path: Path
) -> TopoFeatureVector:
    """t_c of a stored network on the training split of `task`."""
    net = load_checkpoint(checkpoint)
    vector = extract_features(net, generate(task).X_train, extraction)
    write_features_csv(vector, out_path)
    logger.info(
        f"extract_001: \033[33m{len(vector.values)}\033[0m features of \033[36m{checkpoint}\033[0m "
        f"on \033[36m{task.task_id}\033[0m -> \033[36m{out_path}\033[0m"
    )
    return vector
