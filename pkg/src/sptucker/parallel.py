"""Thread-level work distribution for the compiled kernels.

The kernels release the GIL, so plain threads give real parallelism.  Two
schedules are offered: ``dynamic`` hands out fixed-size chunks from a shared
counter (for row updates, whose cost follows the skewed slice sizes) and
``static`` splits the range into one contiguous block per worker.
"""

import itertools
import queue
import threading

import numpy as np


def row_chunk_size(n_rows, threads):
    """Chunk length for dynamically scheduled row updates: min(64, I/(4T))."""
    return max(1, min(64, n_rows // (4 * threads)))


def work_queue(n_items, chunk):
    """Shared queue ``[next_chunk, n_chunks, stop_flag]`` for the compiled
    worker loops, which claim chunks with an atomic fetch-and-add."""
    return np.array([0, -(-n_items // chunk), 0], dtype=np.int64)


def run_workers(threads, target):
    """Run ``target(worker)`` on ``threads`` threads; re-raise the first error."""
    if threads == 1:
        target(0)
        return
    _run_workers(threads, target)


class _Job:
    """One fan-out: ``target(w)`` for w = 1..n-1 on pool threads."""

    __slots__ = ("target", "remaining", "lock", "finished", "error")

    def __init__(self, target, count):
        self.target = target
        self.remaining = count
        self.lock = threading.Lock()
        self.finished = threading.Lock()
        self.finished.acquire()
        self.error = None

    def run(self, worker):
        try:
            self.target(worker)
        except BaseException as exc:  # re-raised in the calling thread
            if self.error is None:
                self.error = exc
        with self.lock:
            self.remaining -= 1
            if self.remaining == 0:
                self.finished.release()


_tasks = queue.SimpleQueue()
_team_size = 0
_team_lock = threading.Lock()


def _serve():
    while True:
        job, worker = _tasks.get()
        job.run(worker)


def _ensure_team(size):
    """Start daemon threads until the shared team has ``size`` members."""
    global _team_size
    with _team_lock:
        while _team_size < size:
            threading.Thread(target=_serve, daemon=True, name=f"sptucker-{_team_size}").start()
            _team_size += 1


def _run_workers(threads, target):
    # worker 0 runs in the calling thread, the rest on the persistent team
    _ensure_team(threads - 1)
    job = _Job(target, threads - 1)
    for w in range(1, threads):
        _tasks.put((job, w))
    first = None
    try:
        target(0)
    except BaseException as exc:
        first = exc
    job.finished.acquire()
    if first is None:
        first = job.error
    if first is not None:
        raise first


def parallel_for(body, n_items, threads=1, schedule="static", chunk=None):
    """Call ``body(start, stop, worker)`` over ``range(n_items)`` in pieces.

    With ``schedule="dynamic"`` each worker repeatedly claims the next chunk
    of ``chunk`` items from a shared counter.  With ``schedule="static"`` worker ``w`` gets the w-th
    of ``threads`` near-equal contiguous blocks.  ``threads == 1`` runs
    inline in the calling thread with the same chunking.
    """
    if n_items <= 0:
        return
    threads = max(1, int(threads))
    if schedule == "dynamic":
        chunk = chunk or row_chunk_size(n_items, threads)
        n_chunks = -(-n_items // chunk)
        if threads == 1 or n_chunks == 1:
            for k in range(n_chunks):
                body(k * chunk, min(n_items, (k + 1) * chunk), 0)
            return
        counter = itertools.count()
        failed = threading.Event()

        def work(worker):
            while not failed.is_set():
                k = next(counter)
                if k >= n_chunks:
                    return
                try:
                    body(k * chunk, min(n_items, (k + 1) * chunk), worker)
                except BaseException:
                    failed.set()
                    raise

        _run_workers(threads, work)
    elif schedule == "static":
        threads = min(threads, n_items)
        bounds = [n_items * w // threads for w in range(threads + 1)]
        if threads == 1:
            body(0, n_items, 0)
            return
        _run_workers(threads, lambda w: body(bounds[w], bounds[w + 1], w))
    else:
        raise ValueError(f"unknown schedule {schedule!r}")


def fixed_chunks(n_items, chunk):
    """Chunk boundaries that do not depend on the worker count."""
    return [(s, min(n_items, s + chunk)) for s in range(0, n_items, chunk)]
