"""Exception hierarchy shared by every fair_pprl module"""


class PPRLError(Exception):
    """Base class for all errors raised by fair_pprl"""


class ConfigurationError(PPRLError):
    """Invalid or inconsistent configuration values"""


class SchemaError(PPRLError):
    """Input data does not match the declared schema"""


class IntegrityError(PPRLError):
    """Data violates an identity or uniqueness constraint"""


class EmptyInputError(PPRLError):
    """An operation received no usable input"""


class DatasetNotFoundError(PPRLError, FileNotFoundError):
    """A dataset file does not exist"""


class DomainError(PPRLError, ValueError):
    """A numeric argument lies outside the domain of the function"""


class DimensionError(PPRLError, ValueError):
    """Bit vectors or arrays of incompatible length"""


class UndefinedRateError(PPRLError, ArithmeticError):
    """A rate has a zero denominator"""


class InsufficientSampleError(PPRLError):
    """A sample does not cover every protected group"""


class TrainingError(PPRLError):
    """A classifier cannot be trained on the given sample"""


class ConvergenceError(PPRLError):
    """An iterative solver hit its iteration cap before reaching tolerance"""
