"""Small dense tanh networks with exact manual backprop, float64.

Parameters live in one flat vector with a recorded (name, shape) layout;
weights are reshaped views into it so the optimizer can update in place.
Evaluation for queries goes through fixed-size padded chunks, which
pins the BLAS kernel shapes and makes batched evaluation bitwise equal
to one-at-a-time evaluation.
"""

import numpy as np

EVAL_CHUNK = 512


class Mlp:
    """Feed-forward net: tanh hidden layers, linear output."""

    def __init__(self, sizes: list[int], params: np.ndarray | None = None):
        self.sizes = list(sizes)
        self.layout = []
        for i in range(len(sizes) - 1):
            self.layout.append((f"W{i}", (sizes[i + 1], sizes[i])))
            self.layout.append((f"b{i}", (sizes[i + 1],)))
        self.n_params = sum(int(np.prod(shape)) for _, shape in self.layout)
        if params is None:
            params = np.zeros(self.n_params)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {params.shape}")
        self.params = params

    def views(self, params: np.ndarray | None = None) -> dict[str, np.ndarray]:
        flat = self.params if params is None else params
        out, at = {}, 0
        for name, shape in self.layout:
            size = int(np.prod(shape))
            out[name] = flat[at : at + size].reshape(shape)
            at += size
        return out

    def init(self, rng: np.random.Generator, zero_head: bool = True) -> None:
        """Glorot-uniform hidden weights, zero biases.

        With ``zero_head`` the output layer starts at zero (the zero map
        is a well-defined starting point for ridge-inverted losses);
        otherwise it gets a small Glorot draw.
        """
        v = self.views()
        n_layers = len(self.sizes) - 1
        for i in range(n_layers):
            w = v[f"W{i}"]
            bound = np.sqrt(6.0 / (w.shape[0] + w.shape[1]))
            if i == n_layers - 1:
                w[:] = 0.0 if zero_head else rng.uniform(-bound, bound, size=w.shape)
            else:
                w[:] = rng.uniform(-bound, bound, size=w.shape)
            v[f"b{i}"][:] = 0.0

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, activations); activations[i] feeds layer i."""
        v = self.views()
        acts = [x]
        h = x
        n_layers = len(self.sizes) - 1
        for i in range(n_layers - 1):
            z = h @ v[f"W{i}"].T
            z += v[f"b{i}"]
            h = np.tanh(z, out=z)
            acts.append(h)
        out = h @ v[f"W{n_layers - 1}"].T
        out += v[f"b{n_layers - 1}"]
        return out, acts

    def backward(self, acts: list[np.ndarray], d_out: np.ndarray) -> np.ndarray:
        """Exact gradient of sum(output * d_out) w.r.t. the flat parameters."""
        v = self.views()
        grad = np.empty_like(self.params)
        g = self.views(grad)
        n_layers = len(self.sizes) - 1
        delta = d_out
        for i in range(n_layers - 1, -1, -1):
            g[f"W{i}"][:] = delta.T @ acts[i]
            g[f"b{i}"][:] = delta.sum(axis=0)
            if i > 0:
                nxt = delta @ v[f"W{i}"]
                h = acts[i]
                gate = h * h  # tanh' = 1 - h^2, applied in place
                np.subtract(1.0, gate, out=gate)
                np.multiply(nxt, gate, out=gate)
                delta = gate
        return grad

    def evaluate_chunked(self, x: np.ndarray) -> np.ndarray:
        """Forward pass in fixed-size zero-padded chunks (query path)."""
        q = x.shape[0]
        out = np.empty((q, self.sizes[-1]))
        for start in range(0, q, EVAL_CHUNK):
            stop = min(start + EVAL_CHUNK, q)
            block = np.zeros((EVAL_CHUNK, self.sizes[0]))
            block[: stop - start] = x[start:stop]
            y, _ = self.forward(block)
            out[start:stop] = y[: stop - start]
        return out


class Adam:
    """Adam with bias correction; state is two flat moment vectors."""

    def __init__(self, n_params: int, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        self.m += (1.0 - self.beta1) * (grad - self.m)
        self.v += (1.0 - self.beta2) * (grad * grad - self.v)
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
