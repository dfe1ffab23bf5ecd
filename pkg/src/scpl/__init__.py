"""SCPL: an interpreter, static checker, simulation runtime, and verifier
for the Social-Contracts Programming Language."""

__version__ = "0.1.0"
