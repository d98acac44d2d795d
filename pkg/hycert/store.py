""":mod:`hycert.store` --- Persisting issued certificates
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

"""
import abc
import json
import os.path
from typing import Dict, Optional

from . import certificate as certfile
from .pipeline import SafetyCertificate


class CertificateStore(abc.ABC, object):
    """Certificates keyed by the digest of the system they prove safe."""

    @abc.abstractmethod
    def get_certificates(self) -> Dict[str, SafetyCertificate]:
        """Every stored certificate by system digest."""

    @abc.abstractmethod
    def put(self, key: str, certificate: SafetyCertificate) -> None:
        """Store ``certificate``, replacing one under the same key."""

    @abc.abstractmethod
    def get(self, key: str) -> Optional[SafetyCertificate]:
        """The certificate stored under ``key``, if any."""


class InMemoryCertificateStore(CertificateStore):
    def __init__(self) -> None:
        self._certificates: Dict[str, SafetyCertificate] = {}

    def get_certificates(self) -> Dict[str, SafetyCertificate]:
        return self._certificates.copy()

    def put(self, key: str, certificate: SafetyCertificate) -> None:
        self._certificates[key] = certificate

    def get(self, key: str) -> Optional[SafetyCertificate]:
        return self._certificates.get(key)


class FileCertificateStore(InMemoryCertificateStore):
    """All certificates in one JSON file, rewritten on every put."""

    def __init__(self, file: str) -> None:
        super().__init__()
        self.file = os.path.expanduser(file)
        if os.path.exists(self.file):
            with open(self.file, 'r', encoding='utf-8') as f:
                documents = json.load(f)
            self._certificates = {
                key: certfile.decode(doc) for key, doc in documents.items()
            }

    def put(self, key: str, certificate: SafetyCertificate) -> None:
        super().put(key, certificate)
        documents = {k: certfile.encode(c)
                     for k, c in self._certificates.items()}
        with open(self.file, 'w', encoding='utf-8') as f:
            json.dump(documents, f, ensure_ascii=False)
