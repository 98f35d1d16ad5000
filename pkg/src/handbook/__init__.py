"""Single-source-of-truth repository for study programs, modules and
lectures, with delegated editing rights, a two-sided inclusion acknowledgment
workflow, freeze-date schedule control and deterministic catalog exports."""

__version__ = "0.1.0"
