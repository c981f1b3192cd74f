"""Pure-numpy twin of the compiled MLP kernels.

Same contract as ``motiac._kernels``: batched dense forward/backward over
C-contiguous float64 arrays. ``motiac.backend`` picks whichever is available.
"""

import numpy as np

ACT_IDENTITY = 0
ACT_TANH = 1
ACT_RELU = 2


def mlp_forward(weights, biases, act_codes, x):
    """Run a dense net over a batch.

    Args:
        weights: list of (d_in, d_out) float64 matrices, one per affine layer.
        biases: list of (d_out,) float64 vectors.
        act_codes: int sequence, one code per layer (output layer is identity).
        x: (n, d0) float64 batch.

    Returns:
        List of activations [a0, a1, ..., aL] with a0 = x and aL the output.
    """
    acts = [x]
    a = x
    for w, b, code in zip(weights, biases, act_codes):
        z = a @ w + b
        if code == ACT_TANH:
            a = np.tanh(z)
        elif code == ACT_RELU:
            a = np.maximum(z, 0.0)
        else:
            a = z
        acts.append(a)
    return acts


def mlp_backward(weights, act_codes, activations, d_out):
    """Backpropagate ``d_out`` (n, dL) through activations from mlp_forward.

    Returns (d_weights, d_biases), each a list shaped like the parameters.
    Gradients are summed over the batch dimension.
    """
    n_layers = len(weights)
    d_ws = [None] * n_layers
    d_bs = [None] * n_layers
    d = d_out
    for layer in reversed(range(n_layers)):
        a_out = activations[layer + 1]
        code = act_codes[layer]
        if code == ACT_TANH:
            dz = d * (1.0 - a_out * a_out)
        elif code == ACT_RELU:
            dz = d * (a_out > 0.0)
        else:
            dz = d
        d_ws[layer] = activations[layer].T @ dz
        d_bs[layer] = dz.sum(axis=0)
        if layer:
            d = dz @ weights[layer].T
    return d_ws, d_bs
