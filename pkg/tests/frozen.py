"""Reference values computed once, outside the package.

Rates and ratios below come from exact rational arithmetic on the case
formulas for the exponential technology and were cross-checked with plain
damped best-response iteration (damping 0.1, tolerance 1e-12).
"""

# exp, no cap, y=0.94, c=0.04, beta=0.7: opposing-only
CASE_II = dict(y=0.94, c=0.04, beta=0.7)
CASE_II_L_RATE = 0.0
CASE_II_H = 0.8928571428571429
CASE_II_TTR = 6.0
CASE_II_MULT_L = 2.9047619047619047
CASE_II_DTTR_DBETA = -16.666666666666668
CASE_II_YBAR = 1 / (1 + 2 * 0.04)

# exp, no cap, y=0.88, c=0.1, beta=0.95: both rates interior
CASE_IV = dict(y=0.88, c=0.1, beta=0.95)
CASE_IV_L_RATE = 0.012280701754385965
CASE_IV_H = 0.7533333333333333
CASE_IV_TTR = 1.4
CASE_IV_YBAR4 = 0.871184726928799

# exp, cap 0.3, beta=0.75, y=0.74, c=0.05: both rates capped
CASE_VI = dict(y=0.74, c=0.05, beta=0.75)
CASE_VI_XBAR = 0.3
CASE_VI_C4 = 0.12791164658634538
CASE_VI_YBAR6 = 0.7307692307692307

C1_XBAR03_Y09 = 0.0958904109589041

# posteriors and steady state at l=0.2, h=0.5, beta=0.6 (y=0.9, lambda*k=2)
POST_SAME = 0.9489795918367347
POST_OPP = 0.7758620689655172
SS_RHO0 = 0.3475609756097561
SS_RHO1 = 0.1524390243902439
SS_TTR = 2.28
