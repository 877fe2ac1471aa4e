"""Compensated running sums."""


class NeumaierSum:
    """Running sum with Neumaier compensation.

    Used where a total is read after every increment, which rules out
    collecting the terms for ``math.fsum``.
    """

    __slots__ = ("_sum", "_comp")

    def __init__(self, start: float = 0.0):
        self._sum = float(start)
        self._comp = 0.0

    def add(self, value: float) -> None:
        total = self._sum + value
        if abs(self._sum) >= abs(value):
            self._comp += (self._sum - total) + value
        else:
            self._comp += (value - total) + self._sum
        self._sum = total

    @property
    def value(self) -> float:
        return self._sum + self._comp
