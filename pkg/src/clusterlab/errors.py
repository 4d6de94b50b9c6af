"""Exception hierarchy shared across the toolkit.

Every error carries an ``exit_code`` so the CLI (and the service error
handler) can map failures onto stable process exit codes without
inspecting message strings:

    2  malformed input (lattice specs, protocol scripts, bad arguments)
    3  empty or invalid lattice
    4  a protocol ran but missed its target on at least one branch
    5  resource limit hit (qubit count, memory, iteration budget)
"""


class ClusterLabError(Exception):
    exit_code = 1


class InputError(ClusterLabError):
    """Malformed user input: lattice specs, scripts, option values."""

    exit_code = 2


class EmptyLatticeError(ClusterLabError):
    """An operation that needs at least one occupied site got none."""

    exit_code = 3


class TargetMissError(ClusterLabError):
    """A protocol completed but at least one branch missed its target."""

    exit_code = 4


class ResourceLimitError(ClusterLabError):
    """A requested computation exceeds a configured resource budget."""

    exit_code = 5
