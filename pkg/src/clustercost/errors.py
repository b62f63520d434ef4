"""Exception hierarchy shared by all clustercost modules."""


class ClusterCostError(Exception):
    """Base class for all errors raised by this package."""


class UnknownImage(ClusterCostError):
    pass


class UnknownWorkflow(ClusterCostError):
    pass


class UnknownService(ClusterCostError):
    pass


class OrphanService(ClusterCostError):
    """A node received requests for a service it hosts no pod for."""


class UnroutableService(ClusterCostError):
    """A workflow references a service with zero pods anywhere in the cluster."""


class ReleaseOverflow(ClusterCostError):
    """A memory release would push free memory above node capacity."""


class DuplicateSample(ClusterCostError):
    pass


class EmptyWindow(ClusterCostError):
    pass


class ParseError(ClusterCostError):
    pass


class SchemaError(ClusterCostError):
    pass


class ValidationError(ClusterCostError):
    pass


class CoverageError(ClusterCostError):
    """The cost table is missing an (image, workflow) pair the scenario needs."""


class NoOverlap(ClusterCostError):
    pass
