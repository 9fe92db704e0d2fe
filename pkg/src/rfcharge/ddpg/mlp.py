"""Dense ReLU networks with hand-written reverse mode, plus an Adam optimizer.

Inputs are batches shaped (B, d_in); a layer computes ``x @ W + b``.
"""
import numpy as np

from ..errors import InvalidParameterError

OUTPUT_ACTIVATIONS = ("linear", "tanh01")


class Mlp:
    """Fully connected network: ReLU hidden layers, linear or tanh-to-[0, 1] output."""

    def __init__(self, weights, biases, output="linear"):
        if output not in OUTPUT_ACTIVATIONS:
            raise InvalidParameterError(f"unknown output activation {output!r}")
        if len(weights) != len(biases) or not weights:
            raise InvalidParameterError("need one bias per weight matrix")
        for W, Wn in zip(weights[:-1], weights[1:]):
            if W.shape[1] != Wn.shape[0]:
                raise InvalidParameterError(f"layer shapes {W.shape} and {Wn.shape} do not chain")
        self.weights = [np.asarray(W, dtype=float) for W in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.output = output

    @classmethod
    def init(cls, sizes, rng, output="linear", final_scale=3e-3):
        """Fan-in uniform init for hidden layers, small uniform init for the last."""
        weights, biases = [], []
        n = len(sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            lim = final_scale if i == n - 1 else 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-lim, lim, size=fan_out))
        return cls(weights, biases, output)

    @property
    def sizes(self):
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    def params(self):
        """Flat list of parameter arrays (shared, not copied): W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self):
        return Mlp([W.copy() for W in self.weights], [b.copy() for b in self.biases],
                   self.output)

    def forward(self, x):
        """Return (output, cache); the cache feeds :meth:`backward`."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.weights[0].shape[0]:
            raise InvalidParameterError(
                f"input width {x.shape[1]} != first layer {self.weights[0].shape[0]}")
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            if i < last:
                h = np.maximum(z, 0.0)
            elif self.output == "tanh01":
                h = np.tanh(z)
            else:
                h = z
            acts.append(h)
        y = (acts[-1] + 1.0) * 0.5 if self.output == "tanh01" else acts[-1]
        return y, (self, acts)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_out):
        """Reverse pass; returns (param grads matching :meth:`params`, input grad)."""
        owner, acts = cache
        if owner is not self or len(acts) != len(self.weights) + 1:
            raise InvalidParameterError("cache does not belong to this network")
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        last = len(self.weights) - 1
        if self.output == "tanh01":
            g = 0.5 * g * (1.0 - acts[-1] ** 2)
        grads = [None] * (2 * len(self.weights))
        for i in range(last, -1, -1):
            if i < last:
                g = g * (acts[i + 1] > 0.0)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, g


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        """In-place descent step on `params`."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
