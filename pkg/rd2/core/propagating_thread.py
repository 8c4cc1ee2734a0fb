from threading import Thread
from typing import Any, Optional


# Courtesy of https://stackoverflow.com/a/31614591/5615927
class PropagatingThread(Thread):
    """A daemon ``Thread`` which re-raises its target's exception on ``join``."""

    def __init__(self, target, name: Optional[str] = None, args=(), kwargs=None):
        super().__init__(target=target, name=name, args=args, kwargs=kwargs or {})
        self.daemon = True
        self.exc: Optional[BaseException] = None
        self.ret: Any = None

    def run(self):
        try:
            self.ret = self._target(*self._args, **self._kwargs)
        except BaseException as e:
            self.exc = e

    def join(self, timeout: Optional[float] = None) -> Any:
        super().join(timeout)
        if self.exc:
            raise self.exc
        return self.ret
