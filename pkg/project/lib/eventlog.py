"""Two-file rotating computation log for jlab.

Logs human-readable events (Groebner runs, syntheses, oracle checks) to
``jlab_event_log.txt``. On each new run, the previous log is rotated to
``jlab_event_log_prev.txt`` so a run can be compared with the one before
it. Only two files are ever kept.

Files:
    jlab_event_log.txt      - Current run (written to)
    jlab_event_log_prev.txt - Previous run (read-only reference)

Environment:
    JLAB_EVENT_LOG          - overrides the current-run path; the previous
                              log sits next to it with a ``_prev`` suffix
    JLAB_EVENT_LOG_DISABLE  - any non-empty value turns logging off
"""

import os
import time


def _default_path():
    return os.environ.get("JLAB_EVENT_LOG", "jlab_event_log.txt")


def _prev_path_for(path):
    root, ext = os.path.splitext(path)
    return root + "_prev" + (ext or ".txt")


_LOG_PATH = _default_path()
_LOG_ENABLED = not os.environ.get("JLAB_EVENT_LOG_DISABLE")
_start = time.monotonic()
_initialized = False


def _initialize_state():
    """Reset timing and rotation state (used after changing ``_LOG_PATH``)."""
    global _start, _initialized
    _start = time.monotonic()
    _initialized = False


def _rotate_logs():
    """Rotate current log to previous, then start fresh.

    Runs once on the first logged event so that importing the module
    alone never touches the filesystem.
    """
    global _initialized
    if _initialized:
        return
    _initialized = True

    prev_path = _prev_path_for(_LOG_PATH)
    try:
        if os.path.exists(_LOG_PATH) and os.path.getsize(_LOG_PATH) > 0:
            try:
                os.replace(_LOG_PATH, prev_path)
            except OSError:
                pass  # Give up on rotation, just overwrite

        with open(_LOG_PATH, "w") as f:
            f.write("===== NEW RUN (pid {}) =====\n".format(os.getpid()))
            f.write("t+0.00s : jlab start\n")
    except OSError:
        # Logging is best-effort
        pass


def _elapsed_s():
    """Return elapsed seconds (float) since the logical start of the run."""
    return time.monotonic() - _start


def clear_log():
    """Clear both log files and reset timing."""
    try:
        with open(_LOG_PATH, "w") as f:
            f.write("")
        try:
            os.remove(_prev_path_for(_LOG_PATH))
        except OSError:
            pass
    except OSError:
        pass
    _initialize_state()


def log_separator(title="timing reset"):
    """Write a separator and reset the logical t=0 for this run."""
    global _start
    if not _LOG_ENABLED:
        return
    _rotate_logs()
    _start = time.monotonic()
    try:
        with open(_LOG_PATH, "a") as f:
            f.write("\n===== SEPARATOR =====\n")
            f.write("t+0.00s : {}\n".format(title))
    except OSError:
        pass


def log_event(message):
    """Append a single-line, human-readable event to the log."""
    if not _LOG_ENABLED:
        return

    _rotate_logs()

    t = _elapsed_s()
    try:
        with open(_LOG_PATH, "a") as f:
            f.write("t+{:.2f}s : {}\n".format(t, message))
    except OSError:
        pass
