"""Natural-language UAV orchestration stack.

Pipeline: classify a task request on two axes (simple/complex,
independent/tool-assisted), plan it, compile the plan into bounded
machine-language vectors, execute them against the built-in quadrotor
simulator or real hardware over UDP, and score the run with
IRA/ESR/UEC/SPR metrics.
"""

__version__ = "0.1.0"
