"""Feature exporter companion to the synthcap captioning library.

Takes a caption corpus and emits the three files synthcap trains from:
text features, image features for generated renderings of each caption,
and the corpus re-written with detector tags.  The library itself is
never imported; the only shared surface is the file formats.
"""

from .backends import Backend, DetectedObject, OfflineBackend, PretrainedBackend, build_backend
from .errors import BackendError, ExportError, ManifestError
from .export import ExportReport, ItemError, row_seed, run_export
from .formats import CorpusRecord, read_input_corpus, write_corpus, write_embeddings
from .manifest import ExportManifest, from_dict, load_manifest

__all__ = [
    "Backend",
    "BackendError",
    "CorpusRecord",
    "DetectedObject",
    "ExportError",
    "ExportManifest",
    "ExportReport",
    "ItemError",
    "ManifestError",
    "OfflineBackend",
    "PretrainedBackend",
    "build_backend",
    "from_dict",
    "load_manifest",
    "read_input_corpus",
    "row_seed",
    "run_export",
    "write_corpus",
    "write_embeddings",
]
