"""A small self-contained SMT solver speaking SMT-LIB 2.6 on stdin/stdout.

Supports quantifier-free formulas over Int and Bool with uninterpreted
functions: boolean structure via Tseitin encoding and DPLL, uninterpreted
functions via Ackermann expansion, and linear integer arithmetic decided
exactly with the Omega test (equality elimination with GCD tightening, then
shadow projection with splinters).  Nonlinear products are abstracted by
fresh variables and candidate models are validated, so nonlinear goals come
back sat (validated model) or unknown, never a wrong unsat.

Run as `python -m invforge.minismt` or through the `invforge-smt` script.
"""
