"""Post-link machine-code optimizer for the SDM-1 architecture.

The package reads linked task files, rebuilds an addressing-independent
program graph, applies unreachable-code elimination, macro compression,
code distribution, and addressing-mode reduction, then re-emits a loadable
task file.  A small emulator supports differential testing and the
``mco run`` subcommand.
"""

from .errors import (InternalError, LinkError, McoError, ParseError,
                     PipelineError, TaskFileError)
from .gen import Asm, GenConfig, generate
from .isa import SDM1, Am, Op
from .pipeline import Options, PipelineResult, optimize
from .taskfile import RelocEntry, Symbol, TaskFile, read_task, write_task
from .vm import equivalent, execute

__version__ = "0.1.0"

__all__ = [
    "SDM1", "Op", "Am",
    "TaskFile", "RelocEntry", "Symbol", "read_task", "write_task",
    "Options", "PipelineResult", "optimize",
    "execute", "equivalent",
    "Asm", "GenConfig", "generate",
    "McoError", "TaskFileError", "ParseError", "LinkError",
    "InternalError", "PipelineError",
    "__version__",
]
