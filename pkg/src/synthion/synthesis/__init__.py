from .problem import (HostSpec, SynthSolution, SynthesisProblem,
                      problem_of_choose, solution_is_valid)
from .search import (Closed, Failed, Partial, Search, SearchContext,
                     SynthConfig, default_rules, splice, synthesize)
from .simplify import simplify
from .cost import branch_cost, cost, solution_cost
