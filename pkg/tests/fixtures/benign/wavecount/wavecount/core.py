import numpy as np


def zero_crossings(samples):
    """Indices where the signal changes sign."""
    arr = np.asarray(samples, dtype=float)
    signs = np.sign(arr)
    return np.nonzero(np.diff(signs))[0]


def peaks(samples, min_height=0.0):
    arr = np.asarray(samples, dtype=float)
    out = []
    for i in range(1, len(arr) - 1):
        if arr[i] > arr[i - 1] and arr[i] >= arr[i + 1] and arr[i] >= min_height:
            out.append(i)
    return out
