"""Export text embeddings into the CGEM format the retrieval toolkit reads."""

from .errors import AdapterError, ManifestError, ModelError
from .export import ExportJob, ExportResult, export_embeddings
from .manifest import ManifestRow, gallery_texts, query_texts, read_rows
from .models import resolve_model

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "ExportJob",
    "ExportResult",
    "ManifestError",
    "ManifestRow",
    "ModelError",
    "__version__",
    "export_embeddings",
    "gallery_texts",
    "query_texts",
    "read_rows",
    "resolve_model",
]
