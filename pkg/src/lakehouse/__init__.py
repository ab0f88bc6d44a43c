"""Federated data catalogue with brokered access governance.

The package is organised as a handful of services sharing one document
store: the catalogue (collections, files, version lineage), storage
(bucket targets, upload tickets, download grants), governance (users,
sessions, visas, access requests, sealed credentials) and the janitor
that reconciles promised uploads against what actually landed.
"""

from .config import ServiceConfig, load_config
from .errors import LakehouseError
from .runtime import ServiceContext, build_context

__all__ = ["LakehouseError", "ServiceConfig", "ServiceContext", "build_context", "load_config"]

__version__ = "0.1.0"
