# Steady-state coherence analysis of non-secular Bloch-Redfield dynamics
__version__ = "1.0.0"
__author__ = "Steady-State Coherence Team"
