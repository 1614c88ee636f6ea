from abc import ABC, abstractmethod
from typing import Callable, Iterable, List, TypeVar

from joblib import Parallel, delayed

T = TypeVar('T')
R = TypeVar('R')


class IWorkPool(ABC):

    @abstractmethod
    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply fn to every item

        :param fn: Callable[[T], R]
            pure function of a single work item
        :param items: Iterable[T]
            work items
        :return: List[R]
            results in submission order, whatever the execution order was
        """
        pass

    @property
    @abstractmethod
    def n_jobs(self) -> int:
        pass


class SerialPool(IWorkPool):
    __slots__ = ()

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        return [fn(item) for item in items]

    @property
    def n_jobs(self) -> int:
        return 1


class JoblibPool(IWorkPool):
    __slots__ = '_n_jobs', '_prefer'

    def __init__(self, n_jobs: int, prefer: str = 'threads') -> None:
        if not n_jobs or (n_jobs < 1 and n_jobs != -1):
            raise ValueError('n_jobs must be a positive number or -1')
        self._n_jobs: int = n_jobs
        self._prefer: str = prefer

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        items = list(items)
        if len(items) <= 1 or self._n_jobs == 1:
            return [fn(item) for item in items]
        return Parallel(n_jobs=self._n_jobs, prefer=self._prefer)(delayed(fn)(item) for item in items)

    @property
    def n_jobs(self) -> int:
        return self._n_jobs


def make_pool(n_jobs: int) -> IWorkPool:
    if n_jobs == 1:
        return SerialPool()
    return JoblibPool(n_jobs)
