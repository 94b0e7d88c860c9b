"""Dense networks with hand-written backprop, plus Adam.

Everything here is plain numpy: the networks are small (two hidden layers
of 256) and batched matmuls keep the whole training loop fast enough that
an autodiff framework would buy nothing but a dependency.
"""

import numpy as np


class Mlp:
    """Fully connected net with tanh hidden layers.

    `out_activation` is "tanh" or "linear". Weights use uniform fan-in
    initialization; the output layer is scaled down so the initial policy
    is near the middle of its range and the initial value estimate near 0.
    """

    def __init__(self, sizes, rng: np.random.Generator,
                 out_activation: str = "tanh", final_scale: float = 0.01):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if out_activation not in ("tanh", "linear"):
            raise ValueError(f"unknown output activation: {out_activation!r}")
        self.sizes = list(sizes)
        self.out_activation = out_activation
        self.weights = []
        self.biases = []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            bound = 1.0 / np.sqrt(n_in)
            w = rng.uniform(-bound, bound, size=(n_in, n_out))
            b = rng.uniform(-bound, bound, size=n_out)
            if i == len(sizes) - 2:
                w *= final_scale
                b *= final_scale
            self.weights.append(w)
            self.biases.append(b)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Batched forward pass; returns (output, cache) with x of shape (B, in)."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ValueError(f"expected input shape (B, {self.sizes[0]}), got {x.shape}")
        activations = [x]
        h = x
        for i in range(self.n_layers):
            z = h @ self.weights[i] + self.biases[i]
            if i < self.n_layers - 1 or self.out_activation == "tanh":
                h = np.tanh(z)
            else:
                h = z
            activations.append(h)
        return h, activations

    def backward(self, cache, grad_out: np.ndarray):
        """Backprop `grad_out` (B, out) through the cached forward pass.

        Returns (weight_grads, bias_grads, grad_input), summed over the batch.
        """
        activations = cache
        g = np.asarray(grad_out, dtype=float)
        w_grads = [None] * self.n_layers
        b_grads = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            out_i = activations[i + 1]
            if i < self.n_layers - 1 or self.out_activation == "tanh":
                g = g * (1.0 - out_i * out_i)  # tanh'
            w_grads[i] = activations[i].T @ g
            b_grads[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return w_grads, b_grads, g

    # flat views used by checkpoints and by the optimizer-state guards
    def get_params(self):
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def set_params(self, weights, biases):
        if len(weights) != self.n_layers or len(biases) != self.n_layers:
            raise ValueError("parameter list length mismatch")
        for i in range(self.n_layers):
            w = np.asarray(weights[i], dtype=float)
            b = np.asarray(biases[i], dtype=float)
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError("parameter shape mismatch")
            self.weights[i] = w.copy()
            self.biases[i] = b.copy()

    def to_json_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "out_activation": self.out_activation,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Mlp":
        net = cls.__new__(cls)
        net.sizes = list(d["sizes"])
        net.out_activation = d["out_activation"]
        net.weights = [np.asarray(w, dtype=float) for w in d["weights"]]
        net.biases = [np.asarray(b, dtype=float) for b in d["biases"]]
        for w, b, n_in, n_out in zip(net.weights, net.biases, net.sizes[:-1], net.sizes[1:]):
            if w.shape != (n_in, n_out) or b.shape != (n_out,):
                raise ValueError("checkpoint parameter shapes do not match sizes")
        return net


class Adam:
    """Adam over an Mlp's parameter lists, state kept per tensor."""

    def __init__(self, net: Mlp, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.net = net
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in net.weights]
        self.v_w = [np.zeros_like(w) for w in net.weights]
        self.m_b = [np.zeros_like(b) for b in net.biases]
        self.v_b = [np.zeros_like(b) for b in net.biases]

    def step(self, w_grads, b_grads):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i in range(self.net.n_layers):
            for p, g, m, v in (
                (self.net.weights[i], w_grads[i], self.m_w[i], self.v_w[i]),
                (self.net.biases[i], b_grads[i], self.m_b[i], self.v_b[i]),
            ):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * (g * g)
                p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_snapshot(self):
        return {
            "t": self.t,
            "m_w": [a.copy() for a in self.m_w],
            "v_w": [a.copy() for a in self.v_w],
            "m_b": [a.copy() for a in self.m_b],
            "v_b": [a.copy() for a in self.v_b],
        }

    def restore(self, snap):
        self.t = snap["t"]
        self.m_w = [a.copy() for a in snap["m_w"]]
        self.v_w = [a.copy() for a in snap["v_w"]]
        self.m_b = [a.copy() for a in snap["m_b"]]
        self.v_b = [a.copy() for a in snap["v_b"]]
