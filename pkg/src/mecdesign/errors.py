"""Exception types shared across the toolkit."""


class MecDesignError(Exception):
    """Base class for all toolkit errors."""


class GraphFormatError(MecDesignError):
    """Malformed graph input: bad names, duplicate or conflicting edges, bad file."""


class InconsistencyError(MecDesignError):
    """Conflicting orientation request; the input graph or imposed edges are invalid."""


class InvalidEssentialGraphError(MecDesignError):
    """Input fails the chain-graph / chordal-components screen for essential graphs."""


class NotAUcegError(MecDesignError):
    """Operation requires a connected, fully undirected, chordal component."""


class NotATreeError(MecDesignError):
    """Operation requires tree-shaped chain components."""


class CapExceededError(MecDesignError):
    """Enumeration or search exceeded its configured work cap."""


class BudgetError(MecDesignError):
    """Intervention budget out of range for the given graph."""
