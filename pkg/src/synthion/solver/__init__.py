from .session import (Budget, CancelToken, CheckResult, Invalid, Sat, Session,
                      Unknown, Unsat, Valid, Verdict, check_sat, check_valid,
                      core_check, shrink_model)
