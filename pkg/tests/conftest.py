import time
from contextlib import contextmanager

import pytest

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


class Outcome:
    """Mutable note a criterion body can fill in for its summary line."""

    def __init__(self):
        self.note = ''


@pytest.fixture
def criterion(request):
    """Context manager that times one acceptance criterion and records its result.

    The block fails when it raises or when it exceeds ``budget`` seconds; a
    ``pytest.skip`` inside the block is recorded as SKIP.
    """
    log = request.config.stash[ACCEPTANCE]

    @contextmanager
    def run(number, title, budget=None):
        outcome = Outcome()
        start = time.perf_counter()

        def record(status, detail):
            elapsed = time.perf_counter() - start
            timing = f'{elapsed:.2f} s' + (f' of {budget:g} s' if budget else '')
            extra = '; '.join(part for part in (detail, outcome.note) if part)
            log.append((number, f'criterion {number:2d} {status:4s} {title} [{timing}]'
                        + (f' {extra}' if extra else '')))

        try:
            yield outcome
        except pytest.skip.Exception as skipped:
            record('SKIP', str(skipped.msg))
            raise
        except BaseException as error:
            record('FAIL', f'{type(error).__name__}: {str(error).splitlines()[0] if str(error) else ""}')
            raise
        elapsed = time.perf_counter() - start
        if budget is not None and elapsed > budget:
            record('FAIL', 'runtime budget exceeded')
            pytest.fail(f'criterion {number} took {elapsed:.2f} s, budget {budget} s')
        record('PASS', '')

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = [line for _, line in sorted(config.stash[ACCEPTANCE], key=lambda item: item[0])]
    if lines:
        terminalreporter.section('acceptance criteria')
        for line in lines:
            terminalreporter.write_line(line)
