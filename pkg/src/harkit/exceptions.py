"""Exception hierarchy shared across the toolkit.

Every error raised by harkit derives from :class:`HarError`.  The CLI maps
the three subfamilies to its exit codes: data problems exit 2, model/schema
problems exit 3, numerical failures during training exit 4.
"""


class HarError(Exception):
    exit_code = 1


class DataError(HarError):
    """Problems with dataset files or label values."""

    exit_code = 2


class RowWidthMismatch(DataError):
    def __init__(self, row, found, expected):
        super().__init__(f"row {row}: found {found} columns, expected {expected}")
        self.row = row
        self.found = found
        self.expected = expected


class NonNumericToken(DataError):
    def __init__(self, row, col, token):
        super().__init__(f"row {row}, column {col}: cannot parse {token!r} as a finite number")
        self.row = row
        self.col = col
        self.token = token


class MissingFile(DataError):
    def __init__(self, name):
        super().__init__(f"missing dataset file: {name}")
        self.name = name


class RowCountMismatch(DataError):
    def __init__(self, file, found, expected):
        super().__init__(f"{file}: found {found} rows, expected {expected}")
        self.file = file
        self.found = found
        self.expected = expected


class UnknownFeature(DataError):
    def __init__(self, name):
        super().__init__(f"unknown feature name: {name!r}")
        self.name = name


class InvalidCode(DataError):
    def __init__(self, code):
        super().__init__(f"activity code {code!r} outside 1..6")
        self.code = code


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class ModelError(HarError):
    """Problems with model files or model/input shape agreement."""

    exit_code = 3


class ShapeMismatch(ModelError):
    pass


class SchemaViolation(ModelError):
    pass


class NotFittedError(ModelError):
    pass


class TrainingError(HarError):
    """Numerical failures while fitting a model."""

    exit_code = 4


class DivergenceDetected(TrainingError):
    pass


class NonFiniteGradient(TrainingError):
    pass


class NonFiniteEvaluation(TrainingError):
    pass


class NonFiniteConfiguration(TrainingError):
    def __init__(self, iteration):
        super().__init__(f"embedding diverged at iteration {iteration}")
        self.iteration = iteration


class NotConverged(TrainingError):
    def __init__(self, max_passes):
        super().__init__(f"solver did not converge within {max_passes} passes")
        self.max_passes = max_passes


class KernelNotSymmetric(TrainingError):
    pass


class SearchFailed(TrainingError):
    """Perplexity binary search hit max_iter without reaching the target.

    The t-SNE path does not raise this during embedding; rows that fail keep
    their boundary sigma and are flagged on the result instead.
    """

    def __init__(self, target, achieved, iterations):
        super().__init__(
            f"perplexity search missed target {target} (achieved {achieved}) "
            f"after {iterations} iterations")
        self.target = target
        self.achieved = achieved
        self.iterations = iterations


class EmptyNode(HarError):
    pass
