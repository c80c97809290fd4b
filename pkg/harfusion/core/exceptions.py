import logging


logger = logging.getLogger(__name__)


class ExitCode:
    """
    Process exit codes reported by the command line.
    """

    SUCCESS = 0
    DATA = 1
    CONFIG = 2
    STAGE_ORDER = 3
    NUMERIC = 4


class HarfusionError(Exception):
    """
    Base exception class for pipeline errors.

    Logs an error message upon initialization.

    :param exit_code: int, optional
        Process exit code the command line reports (default is 1, data error).
    :param detail: str, optional
        Error detail message.
    :param log_message: str | Exception | None, optional
        Message or exception to be logged. If an Exception is passed, logs with traceback.
    """

    def __init__(
        self,
        *,
        exit_code: int = ExitCode.DATA,
        detail: str = "Pipeline error",
        log_message: str | Exception | None = None,
    ) -> None:
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail
        if isinstance(log_message, Exception):
            logger.error(f"{self.__class__.__name__}: {detail}", exc_info=log_message)
        else:
            logger.error(f"{self.__class__.__name__}: {log_message or detail}")


def create_exception_class(name: str, exit_code: int, detail_template: str):
    """
    Dynamically create a new exception class inheriting from HarfusionError.

    The generated exception class formats the detail message using the provided template.

    :param name: str
        Name of the new exception class.
    :param exit_code: int
        Exit code that the exception will use.
    :param detail_template: str
        A format string used to create the exception detail message.
    :return: type
        A new exception class ready to be raised with formatted detail.
    """
    return type(
        name,
        (HarfusionError,),
        {
            "__init__": lambda self, *args, log_message=None: HarfusionError.__init__(
                self,
                exit_code=exit_code,
                detail=detail_template.format(*args),
                log_message=log_message,
            )
        },
    )


ConfigError = create_exception_class(
    "ConfigError",
    ExitCode.CONFIG,
    "Invalid configuration: {}",
)

ColumnMapError = create_exception_class(
    "ColumnMapError",
    ExitCode.CONFIG,
    "Column map is missing source column(s) {} in {}.",
)

InvalidParameterError = create_exception_class(
    "InvalidParameterError",
    ExitCode.CONFIG,
    "Invalid parameter {}: {}.",
)

StageOrderError = create_exception_class(
    "StageOrderError",
    ExitCode.STAGE_ORDER,
    "Stage '{}' requires stage '{}' to run first (no manifest in {}).",
)

ProvenanceError = create_exception_class(
    "ProvenanceError",
    ExitCode.STAGE_ORDER,
    "Artifact {} was produced by config hash {}, expected {}.",
)

ArchitectureMismatchError = create_exception_class(
    "ArchitectureMismatchError",
    ExitCode.STAGE_ORDER,
    "Model file {} has architecture hash {}, expected {}.",
)

NonFiniteLossError = create_exception_class(
    "NonFiniteLossError",
    ExitCode.NUMERIC,
    "Non-finite loss at epoch {} step {}: {}.",
)

NonFiniteInputError = create_exception_class(
    "NonFiniteInputError",
    ExitCode.NUMERIC,
    "Non-finite values in {}.",
)

DegenerateQuaternionError = create_exception_class(
    "DegenerateQuaternionError",
    ExitCode.NUMERIC,
    "Degenerate quaternion (norm {}) in {}.",
)

EmptyRecordingError = create_exception_class(
    "EmptyRecordingError",
    ExitCode.DATA,
    "Recording {} contains no usable rows.",
)

NonMonotonicTimestampsError = create_exception_class(
    "NonMonotonicTimestampsError",
    ExitCode.DATA,
    "Timestamps in {} are not strictly increasing at row {}.",
)

OverlappingAnnotationsError = create_exception_class(
    "OverlappingAnnotationsError",
    ExitCode.DATA,
    "Annotations overlap for subject {}: {} and {}.",
)

ShapeMismatchError = create_exception_class(
    "ShapeMismatchError",
    ExitCode.DATA,
    "Shape mismatch in {}: got {}, expected {}.",
)

CorruptArtifactError = create_exception_class(
    "CorruptArtifactError",
    ExitCode.DATA,
    "Artifact {} is corrupt: {}.",
)

InvalidProbabilityError = create_exception_class(
    "InvalidProbabilityError",
    ExitCode.DATA,
    "Invalid probability distribution for sample {}: {}.",
)

LengthMismatchError = create_exception_class(
    "LengthMismatchError",
    ExitCode.DATA,
    "Length mismatch: {} predictions vs {} ground truths.",
)

EmptyMatrixError = create_exception_class(
    "EmptyMatrixError",
    ExitCode.DATA,
    "Confusion matrix is empty; no metrics can be computed.",
)

ProtocolError = create_exception_class(
    "ProtocolError",
    ExitCode.DATA,
    "Protocol {} cannot run: {}.",
)
