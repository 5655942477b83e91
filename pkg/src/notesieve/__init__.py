"""notesieve: dynamic retrieval of clinical notes from EHR-style audit logs."""

__version__ = "0.1.0"
