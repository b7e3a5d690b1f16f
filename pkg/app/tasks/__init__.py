from .harness import evaluate_chunk, run_suite, verify_average_form, verify_lhl

__all__ = ["evaluate_chunk", "run_suite", "verify_average_form", "verify_lhl"]
