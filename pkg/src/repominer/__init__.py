"""repominer: repository-mention mining and data-sharing analytics."""

__version__ = "0.1.0"

from .documents import DisciplineAssignment, Document  # noqa: F401
from .labels import AnnotationRecord, IntentLabel, Prediction  # noqa: F401
from .registry import CompiledRegistry, Mention, RepositoryEntry  # noqa: F401
