"""DEAP archive to portable tensor container converter."""

from .convert import ArchiveError, convert, load_archive

__version__ = "0.1.0"
