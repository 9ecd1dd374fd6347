import logging
import os
import tempfile
from pathlib import Path

from app import settings
from .errors import OutputDirectoryLocked


logger = logging.getLogger(__name__)


class RunDirectory:
    """
    Output directory of one command.

    Entering the context takes a lock file (a second command on the same directory is
    rejected). Files are staged under temporary names and renamed into place only when
    the block exits without error, so a failed command leaves no partial outputs.
    """

    def __init__(self, path, **kwargs):
        self.path = Path(path)
        self.lock_filename = kwargs.get("lock_filename", settings.DKSE_LOCK_FILENAME)
        self._staged = {}
        self._locked = False

    @property
    def lock_path(self) -> Path:
        return self.path / self.lock_filename

    def __enter__(self):
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OutputDirectoryLocked(
                f"Output directory '{self.path}' is in use by another command ({self.lock_path} exists)."
            )
        with os.fdopen(fd, "w") as handle:
            handle.write(str(os.getpid()))
        self._locked = True
        return self

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self.commit()
            else:
                self.discard()
        finally:
            if self._locked:
                self.lock_path.unlink(missing_ok=True)
                self._locked = False
        return False

    def file(self, name: str) -> Path:
        return self.path / name

    def write_text(self, name: str, text: str):
        self.write_bytes(name, text.encode("utf-8"))

    def write_bytes(self, name: str, data: bytes):
        target = self.file(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, temp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        previous = self._staged.pop(target, None)
        if previous:
            Path(previous).unlink(missing_ok=True)
        self._staged[target] = temp
        if not self._locked:
            # Outside a command context writes land immediately
            self.commit()

    def commit(self):
        for target, temp in self._staged.items():
            os.replace(temp, target)
            logger.debug(f"Wrote {target}")
        self._staged.clear()

    def discard(self):
        for temp in self._staged.values():
            Path(temp).unlink(missing_ok=True)
        if self._staged:
            logger.warning(f"Discarded {len(self._staged)} staged outputs in {self.path}.")
        self._staged.clear()

    def __str__(self):
        return f"RunDirectory(path={self.path})"

    def __repr__(self):
        return self.__str__()
