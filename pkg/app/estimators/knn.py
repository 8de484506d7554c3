"""k-nearest-neighbour model-state classification on standardized features."""

from collections import Counter
import numpy as np
from ..errors import InsufficientDataError, LayoutMismatchError
from .standardizer import Standardizer
from .table import FeatureTable


def knn_state(
    query: np.ndarray,
    table: FeatureTable,
    standardizer: Standardizer,
    k: int = 3,
    query_layout_hash: str | None = None,
) -> str:
    """Majority state among the k nearest records (Euclidean, standardized space).

    A tied vote goes to the first neighbour, in distance order, whose state is
    among the tied ones; with a tie that includes it, that is the nearest one.
    """
    if len(table) == 0:
        raise InsufficientDataError("kNN needs at least one record")
    if query_layout_hash is not None and query_layout_hash != table.layout_hash:
        raise LayoutMismatchError("Query layout does not match the record layout")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (table.features.shape[1],):
        raise LayoutMismatchError(
            f"Query has {query.shape} components, records have {table.features.shape[1]}"
        )
    distances = np.linalg.norm(standardizer.transform(table.features) - standardizer.transform(query), axis=1)
    nearest = np.argsort(distances, kind="stable")[: min(k, len(table))]
    labels = [str(table.states[index]) for index in nearest]
    votes = Counter(labels)
    top = max(votes.values())
    tied = {label for label, count in votes.items() if count == top}
    return next(label for label in labels if label in tied)
