import time
from collections import defaultdict, deque
import datetime
import importlib
import random
import sys

import numpy as np

_QUIET = False
_VERBOSE = False


def log(*args, **kwargs):
    """Diagnostics go to stderr so that stdout only carries reports."""
    if _QUIET:
        return
    kwargs.setdefault("file", sys.stderr)
    kwargs.setdefault("flush", True)
    print(*args, **kwargs)


def debug(*args, **kwargs):
    if _VERBOSE:
        log(*args, **kwargs)


def set_quiet(quiet):
    global _QUIET
    _QUIET = bool(quiet)


def set_verbose(verbose):
    global _VERBOSE
    _VERBOSE = bool(verbose)


def seed_everything(seed):
    random.seed(seed)
    np.random.seed(seed)
    return np.random.default_rng(seed)


def get_obj_from_str(string, reload=False):
    module, cls = string.rsplit(".", 1)
    if reload:
        module_imp = importlib.import_module(module)
        importlib.reload(module_imp)
    return getattr(importlib.import_module(module, package=None), cls)


def instantiate_from_config(config, *args, **kwargs):
    """Call ``config.target`` with ``config.params`` merged under ``kwargs``."""
    if "target" not in config:
        raise KeyError("Expected key `target` to instantiate.")
    params = dict(config.get("params") or {})
    params.update(kwargs)
    return get_obj_from_str(config["target"])(*args, **params)


class SmoothedValue(object):
    """Windowed median of the recent values next to the running mean of all of them."""

    def __init__(self, window_size=20, fmt="{median:.4f} ({global_avg:.4f})"):
        self.window = deque(maxlen=window_size)
        self.total = 0.0
        self.count = 0
        self.fmt = fmt

    def update(self, value):
        self.window.append(value)
        self.count += 1
        self.total += value

    @property
    def median(self):
        return float(np.median(self.window)) if self.window else 0.0

    @property
    def global_avg(self):
        return self.total / max(self.count, 1)

    @property
    def last(self):
        return self.window[-1] if self.window else 0

    def __str__(self):
        return self.fmt.format(median=self.median, global_avg=self.global_avg, last=self.last)


class MetricLogger(object):
    """
    Progress lines for a loop over degrees or check suites:
    ``header [i/n] eta: ... <meters> time: <seconds per item>``.

    Integer meters (current degree, failure count) print their last value,
    float meters their smoothed value.
    """

    def __init__(self, delimiter="  ", emit=log):
        self.meters = defaultdict(lambda: SmoothedValue(fmt="{last}"))
        self.delimiter = delimiter
        self.emit = emit

    def update(self, **kwargs):
        for k, v in kwargs.items():
            if isinstance(v, np.generic):
                v = v.item()
            if isinstance(v, float) and k not in self.meters:
                self.meters[k] = SmoothedValue()
            self.meters[k].update(v)

    def __str__(self):
        return self.delimiter.join("{}: {}".format(name, meter) for name, meter in self.meters.items())

    def log_every(self, iterable, print_freq, header=""):
        items = list(iterable)
        if not items:
            return
        step = SmoothedValue(fmt="{global_avg:.4f}s")
        width = len(str(len(items)))
        start = end = time.time()
        for i, obj in enumerate(items):
            yield obj
            step.update(time.time() - end)
            end = time.time()
            if i % print_freq == 0 or i == len(items) - 1:
                eta = datetime.timedelta(seconds=int(step.global_avg * (len(items) - i - 1)))
                self.emit(self.delimiter.join(part for part in (
                    header, "[{:{w}d}/{}]".format(i + 1, len(items), w=width),
                    "eta: {}".format(eta), str(self), "time: {}".format(step)) if part))
        total = time.time() - start
        self.emit("{} total time: {} ({:.4f} s / it)".format(
            header, datetime.timedelta(seconds=int(total)), total / len(items)))
