from .nodes import *  # noqa: F401,F403
from .parser import parse
from .printer import print_program, print_expr, print_type
from .check import typecheck, TypedProgram, Diagnostic
