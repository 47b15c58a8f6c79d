"""Small problems shared by the unit tests."""
from aoplan.geometry import RectWorld
from aoplan.problems import _kinematic


def open_square(start=(0.1, 0.1), goal=("circle", 0.9, 0.9, 0.05), obstacles=()):
    return _kinematic(RectWorld("open", (0, 1, 0, 1), start, goal, obstacles))


def walled_square():
    """Unit square with one wall forcing a detour above it."""
    return open_square(start=(0.1, 0.5), goal=("circle", 0.9, 0.5, 0.05),
                       obstacles=[(0.45, 0.0, 0.1, 0.7)])
