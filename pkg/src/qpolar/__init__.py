"""q-ary polar coding toolkit with per-node (dynamic) kernels.

Subpackages cover the full pipeline: finite fields and kernels (`gf`),
discrete memoryless channels (`channel`), the reliability/noise parameter
calculus (`params`), exact single-step channel synthesis (`transform`),
coset weight enumerators and the transform-parameter bounds built on them
(`ftpc`), kernel certification and search (`kernsearch`), code construction
with successive-cancellation encoding/decoding (`codec`), polarization
process simulation (`procsim`), and a JSON-speaking command line (`cli`).
"""

__version__ = "0.1.0"
