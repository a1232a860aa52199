"""GARCH-EVT-copula tail-risk toolkit.

Volatility filtering, heavy-tailed marginals, bivariate copulas, VaR/ES/RVaR
estimation with elicitability scores, and generalized-FEVD spillover tables.
"""

__version__ = "0.1.0"
