import functools
import time

ACCEPTANCE = {}


def criterion(label, title, budget):
    """Record the outcome and wall time of an acceptance test under ``label``."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
                elapsed = time.perf_counter() - start
                assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
            except BaseException as err:
                ACCEPTANCE[label] = ("FAIL", title, time.perf_counter() - start, str(err).splitlines()[0][:120])
                raise
            ACCEPTANCE[label] = ("PASS", title, elapsed, detail or "")

        return run

    return wrap


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: (not s.isdigit(), int(s) if s.isdigit() else 0, s)):
        status, title, elapsed, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"criterion {label:>4}: {status}  {title} ({elapsed:.2f} s) {detail}")
