#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ecgi/common.hpp"
#include "ecgi/tensor.hpp"

namespace ecgi {

// Reverse-mode differentiation over dense tensors. Every operation builds a
// node recording its inputs and a closure that scatters the node's gradient
// back into them. backward() walks the graph once in reverse topological
// order, so gradients for a fixed graph are bitwise-reproducible.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;                      // allocated on first use, same shape as value
    bool requires_grad = false;
    const char* op = "leaf";          // provenance of the producing operation
    std::string name;                 // set for trainable parameters
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;

    void ensure_grad() {
        if (grad.v.size() != value.v.size()) {
            grad = Tensor(value.shape);
        }
    }

    void zero_grad() {
        if (!grad.v.empty()) grad.fill(0.0);
    }
};

inline Var constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    return n;
}

inline Var make_param(Tensor t, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = true;
    n->name = std::move(name);
    n->op = "param";
    return n;
}

namespace detail {

inline Var make_op(const char* op, Tensor value, std::vector<Var> parents,
                   std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = op;
    for (const auto& p : parents)
        if (p->requires_grad) n->requires_grad = true;
    n->parents = std::move(parents);
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

}  // namespace detail

// Propagates d(loss)/d(node) into every reachable node with requires_grad.
// Gradients accumulate (+=); call zero_grad on parameters between steps.
inline void backward(const Var& loss) {
    if (loss->value.size() != 1)
        throw ValidationError("backward: loss must be scalar, got shape " +
                              loss->value.shape_str());

    // iterative DFS post-order; reversal gives a valid topological order
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad.v[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

// ---- elementwise operations ----

inline Var add(const Var& a, const Var& b) {
    require_same_shape(a->value, b->value, "add");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b->value.v[i];
    return detail::make_op("add", std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) continue;
            p.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad.v[i] += self.grad.v[i];
        }
    });
}

inline Var sub(const Var& a, const Var& b) {
    require_same_shape(a->value, b->value, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= b->value.v[i];
    return detail::make_op("sub", std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) continue;
            p.ensure_grad();
            const double s = k == 0 ? 1.0 : -1.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad.v[i] += s * self.grad.v[i];
        }
    });
}

inline Var mul(const Var& a, const Var& b) {
    require_same_shape(a->value, b->value, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= b->value.v[i];
    return detail::make_op("mul", std::move(out), {a, b}, [](Node& self) {
        Node& a = *self.parents[0];
        Node& b = *self.parents[1];
        if (a.requires_grad) {
            a.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                a.grad.v[i] += self.grad.v[i] * b.value.v[i];
        }
        if (b.requires_grad) {
            b.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                b.grad.v[i] += self.grad.v[i] * a.value.v[i];
        }
    });
}

inline Var scale(const Var& a, double c) {
    Tensor out = a->value;
    for (double& x : out.v) x *= c;
    return detail::make_op("scale", std::move(out), {a}, [c](Node& self) {
        Node& a = *self.parents[0];
        a.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) a.grad.v[i] += c * self.grad.v[i];
    });
}

// elu(x) = x for x > 0, exp(x) - 1 otherwise. C1 at zero: both one-sided
// derivatives are 1.
inline Var elu(const Var& a) {
    Tensor out = a->value;
    for (double& x : out.v)
        if (x <= 0.0) x = std::expm1(x);
    return detail::make_op("elu", std::move(out), {a}, [](Node& self) {
        Node& a = *self.parents[0];
        a.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double d = a.value.v[i] > 0.0 ? 1.0 : self.value.v[i] + 1.0;
            a.grad.v[i] += d * self.grad.v[i];
        }
    });
}

inline Var sum(const Var& a) {
    double s = 0.0;
    for (double x : a->value.v) s += x;
    return detail::make_op("sum", Tensor::scalar(s), {a}, [](Node& self) {
        Node& a = *self.parents[0];
        a.ensure_grad();
        const double g = self.grad.v[0];
        for (double& x : a.grad.v) x += g;
    });
}

// mean over all elements of squared differences
inline Var mse(const Var& a, const Var& b) {
    require_same_shape(a->value, b->value, "mse");
    const std::size_t n = a->value.size();
    if (n == 0) throw ValidationError("mse: empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a->value.v[i] - b->value.v[i];
        s += d * d;
    }
    return detail::make_op("mse", Tensor::scalar(s / static_cast<double>(n)), {a, b},
                           [n](Node& self) {
                               Node& a = *self.parents[0];
                               Node& b = *self.parents[1];
                               const double g = 2.0 * self.grad.v[0] / static_cast<double>(n);
                               if (a.requires_grad) {
                                   a.ensure_grad();
                                   for (std::size_t i = 0; i < n; ++i)
                                       a.grad.v[i] += g * (a.value.v[i] - b.value.v[i]);
                               }
                               if (b.requires_grad) {
                                   b.ensure_grad();
                                   for (std::size_t i = 0; i < n; ++i)
                                       b.grad.v[i] -= g * (a.value.v[i] - b.value.v[i]);
                               }
                           });
}

// ---- temporal convolutions ----
//
// x: (V, Cin, T), weights: (Cout, Cin, W). Cross-correlation along time with
// zero padding; out time length floor((T + 2*padding - width)/stride) + 1.

inline Var temporal_conv(const Var& x, const Var& w, std::size_t stride, std::size_t padding) {
    const Tensor& xv = x->value;
    const Tensor& wv = w->value;
    if (xv.rank() != 3 || wv.rank() != 3)
        throw ValidationError("temporal_conv: expected rank-3 input and weights");
    const std::size_t V = xv.dim(0), Ci = xv.dim(1), T = xv.dim(2);
    const std::size_t Co = wv.dim(0), W = wv.dim(2);
    if (wv.dim(1) != Ci)
        throw ValidationError("temporal_conv: weight in_channels " + std::to_string(wv.dim(1)) +
                              " != input channels " + std::to_string(Ci));
    if (stride < 1) throw ValidationError("temporal_conv: stride must be >= 1");
    if (W > T + 2 * padding)
        throw ValidationError("temporal_conv: width exceeds padded time length");
    const std::size_t To = (T + 2 * padding - W) / stride + 1;

    Tensor out({V, Co, To});
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t co = 0; co < Co; ++co) {
            double* orow = &out.v[(v * Co + co) * To];
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const double* xrow = &xv.v[(v * Ci + ci) * T];
                const double* wrow = &wv.v[(co * Ci + ci) * W];
                for (std::size_t k = 0; k < W; ++k) {
                    const double wk = wrow[k];
                    if (wk == 0.0) continue;
                    for (std::size_t to = 0; to < To; ++to) {
                        const std::ptrdiff_t ti =
                            static_cast<std::ptrdiff_t>(to * stride + k) -
                            static_cast<std::ptrdiff_t>(padding);
                        if (ti >= 0 && ti < static_cast<std::ptrdiff_t>(T))
                            orow[to] += wk * xrow[ti];
                    }
                }
            }
        }
    }

    auto bp = [V, Ci, T, Co, W, To, stride, padding](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        if (xn.requires_grad) xn.ensure_grad();
        if (wn.requires_grad) wn.ensure_grad();
        for (std::size_t v = 0; v < V; ++v) {
            for (std::size_t co = 0; co < Co; ++co) {
                const double* grow = &self.grad.v[(v * Co + co) * To];
                for (std::size_t ci = 0; ci < Ci; ++ci) {
                    const double* xrow = &xn.value.v[(v * Ci + ci) * T];
                    const double* wrow = &wn.value.v[(co * Ci + ci) * W];
                    double* gxrow = xn.requires_grad ? &xn.grad.v[(v * Ci + ci) * T] : nullptr;
                    double* gwrow = wn.requires_grad ? &wn.grad.v[(co * Ci + ci) * W] : nullptr;
                    for (std::size_t k = 0; k < W; ++k) {
                        double gw = 0.0;
                        for (std::size_t to = 0; to < To; ++to) {
                            const std::ptrdiff_t ti =
                                static_cast<std::ptrdiff_t>(to * stride + k) -
                                static_cast<std::ptrdiff_t>(padding);
                            if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
                            if (gxrow) gxrow[ti] += wrow[k] * grow[to];
                            gw += xrow[ti] * grow[to];
                        }
                        if (gwrow) gwrow[k] += gw;
                    }
                }
            }
        }
    };
    return detail::make_op("temporal_conv", std::move(out), {x, w}, std::move(bp));
}

// Adjoint of temporal_conv with the same parameters:
//   <temporal_conv(x, w), y> == <x, transposed_temporal_conv(y, w)>.
// y: (V, Cout, To) -> (V, Cin, T) with T = (To - 1)*stride + width - 2*padding.
inline Var transposed_temporal_conv(const Var& y, const Var& w, std::size_t stride,
                                    std::size_t padding) {
    const Tensor& yv = y->value;
    const Tensor& wv = w->value;
    if (yv.rank() != 3 || wv.rank() != 3)
        throw ValidationError("transposed_temporal_conv: expected rank-3 input and weights");
    const std::size_t V = yv.dim(0), Co = yv.dim(1), To = yv.dim(2);
    const std::size_t Ci = wv.dim(1), W = wv.dim(2);
    if (wv.dim(0) != Co)
        throw ValidationError("transposed_temporal_conv: weight out_channels " +
                              std::to_string(wv.dim(0)) + " != input channels " +
                              std::to_string(Co));
    if (stride < 1) throw ValidationError("transposed_temporal_conv: stride must be >= 1");
    const std::ptrdiff_t Ts =
        static_cast<std::ptrdiff_t>((To - 1) * stride + W) - 2 * static_cast<std::ptrdiff_t>(padding);
    if (Ts <= 0) throw ValidationError("transposed_temporal_conv: non-positive output length");
    const std::size_t T = static_cast<std::size_t>(Ts);

    Tensor out({V, Ci, T});
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t co = 0; co < Co; ++co) {
            const double* yrow = &yv.v[(v * Co + co) * To];
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                double* orow = &out.v[(v * Ci + ci) * T];
                const double* wrow = &wv.v[(co * Ci + ci) * W];
                for (std::size_t k = 0; k < W; ++k) {
                    const double wk = wrow[k];
                    if (wk == 0.0) continue;
                    for (std::size_t to = 0; to < To; ++to) {
                        const std::ptrdiff_t ti =
                            static_cast<std::ptrdiff_t>(to * stride + k) -
                            static_cast<std::ptrdiff_t>(padding);
                        if (ti >= 0 && ti < static_cast<std::ptrdiff_t>(T))
                            orow[ti] += wk * yrow[to];
                    }
                }
            }
        }
    }

    auto bp = [V, Ci, T, Co, W, To, stride, padding](Node& self) {
        Node& yn = *self.parents[0];
        Node& wn = *self.parents[1];
        if (yn.requires_grad) yn.ensure_grad();
        if (wn.requires_grad) wn.ensure_grad();
        for (std::size_t v = 0; v < V; ++v) {
            for (std::size_t co = 0; co < Co; ++co) {
                const double* yrow = &yn.value.v[(v * Co + co) * To];
                double* gyrow = yn.requires_grad ? &yn.grad.v[(v * Co + co) * To] : nullptr;
                for (std::size_t ci = 0; ci < Ci; ++ci) {
                    const double* grow = &self.grad.v[(v * Ci + ci) * T];
                    const double* wrow = &wn.value.v[(co * Ci + ci) * W];
                    double* gwrow = wn.requires_grad ? &wn.grad.v[(co * Ci + ci) * W] : nullptr;
                    for (std::size_t k = 0; k < W; ++k) {
                        double gw = 0.0;
                        for (std::size_t to = 0; to < To; ++to) {
                            const std::ptrdiff_t ti =
                                static_cast<std::ptrdiff_t>(to * stride + k) -
                                static_cast<std::ptrdiff_t>(padding);
                            if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
                            if (gyrow) gyrow[to] += wrow[k] * grow[ti];
                            gw += yrow[to] * grow[ti];
                        }
                        if (gwrow) gwrow[k] += gw;
                    }
                }
            }
        }
    };
    return detail::make_op("transposed_temporal_conv", std::move(out), {y, w}, std::move(bp));
}

}  // namespace ecgi
